#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "distembed/frames.hpp"
#include "distembed/graph.hpp"
#include "distembed/types.hpp"

namespace distembed {

/// Comma-separated matrix with a header row; values round-trip exactly.
void write_csv_matrix(std::ostream& out, const Matrix& m, const std::string& column_prefix);
void write_csv_matrix(const std::string& path, const Matrix& m, const std::string& column_prefix);

/// Read a CSV matrix written by write_csv_matrix (header row required).
Matrix read_csv_matrix(std::istream& in);
Matrix read_csv_matrix(const std::string& path);

/// Single integer column with a header.
std::vector<int> read_labels_csv(const std::string& path);

/// Edge-list text format: `u v d` per line, `#` comments.
void write_edge_list(std::ostream& out, const DistanceGraph& g);
void write_edge_list(const std::string& path, const DistanceGraph& g);
DistanceGraph load_edge_list_file(const std::string& path);

/// Shortest exact decimal form of a double (round-trips bit-exactly).
std::string format_double(double v);

/// Debug dump of a frame field: one `frm_k.csv` / `frminv_k.csv` triplet
/// file (i,j,value) per component plus `vol.csv`.
void dump_frame_field(const std::string& path_prefix, const LocalFrameSet& frames);

}  // namespace distembed
