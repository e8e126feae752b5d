#include "distembed/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace distembed {

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

void write_csv_matrix(std::ostream& out, const Matrix& m, const std::string& column_prefix) {
  for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << column_prefix << c;
  out << "\n";
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << "\n";
  }
}

void write_csv_matrix(const std::string& path, const Matrix& m, const std::string& column_prefix) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open " + path + " for writing");
  write_csv_matrix(f, m, column_prefix);
}

Matrix read_csv_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV input");
  std::vector<std::vector<double>> rows;
  int cols = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("CSV line " + std::to_string(line_no) + ": bad number `" + cell + "`");
      }
    }
    if (cols < 0)
      cols = static_cast<int>(row.size());
    else if (static_cast<int>(row.size()) != cols)
      throw InputError("CSV line " + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || cols <= 0) throw InputError("CSV has no data rows");
  Matrix m(static_cast<int>(rows.size()), cols);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  return m;
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  return read_csv_matrix(f);
}

std::vector<int> read_labels_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw InputError("empty labels file");
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw InputError("labels line " + std::to_string(line_no) + ": bad integer `" + line + "`");
    }
  }
  if (labels.empty()) throw InputError("labels file has no rows");
  return labels;
}

void write_edge_list(std::ostream& out, const DistanceGraph& g) {
  out << "# " << g.num_vertices() << " vertices, " << g.num_edges() << " edges\n";
  for (int u = 0; u < g.num_vertices(); ++u)
    for (const Neighbor& nb : g.neighbors(u)) {
      if (nb.id < u) continue;
      out << u << " " << nb.id << " " << format_double(nb.dist) << "\n";
    }
}

void write_edge_list(const std::string& path, const DistanceGraph& g) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open " + path + " for writing");
  write_edge_list(f, g);
}

DistanceGraph load_edge_list_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  return load_edge_list(f);
}

namespace {

void dump_component(const std::string& path, const SpMatR& comp) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open " + path + " for writing");
  f << "i,j,value\n";
  for (int i = 0; i < comp.outerSize(); ++i)
    for (SpMatR::InnerIterator it(comp, i); it; ++it)
      f << i << "," << it.col() << "," << format_double(it.value()) << "\n";
}

}  // namespace

void dump_frame_field(const std::string& path_prefix, const LocalFrameSet& frames) {
  for (int k = 0; k < frames.dim; ++k) {
    dump_component(path_prefix + "frm_" + std::to_string(k) + ".csv", frames.frame[k]);
    dump_component(path_prefix + "frminv_" + std::to_string(k) + ".csv", frames.frame_inv[k]);
  }
  std::ofstream f(path_prefix + "vol.csv");
  if (!f) throw InputError("cannot open " + path_prefix + "vol.csv for writing");
  f << "vol\n";
  for (int v = 0; v < frames.volume.size(); ++v) f << format_double(frames.volume(v)) << "\n";
}

}  // namespace distembed
