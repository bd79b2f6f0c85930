#include "dinavd/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dinavd {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void write_row(std::ostream& out, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << format_double(row[i]);
  }
  out << '\n';
}

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out << ',';
    out << cols[i];
  }
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table_csv(const std::filesystem::path& path, const Table& table) {
  auto out = open_out(path);
  write_header(out, table.columns);
  for (const auto& row : table.rows) write_row(out, row);
}

Table read_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw Error("'" + path.string() + "': empty CSV (no header)");
  t.columns = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw Error("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                  std::to_string(t.columns.size()) + " fields, got " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  const std::size_t d = traj.xs.empty() ? 0 : static_cast<std::size_t>(traj.xs.front().size());
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 0; i < d; ++i) cols.push_back("x_" + std::to_string(i));
  for (std::size_t i = 0; i < d; ++i) cols.push_back("v_" + std::to_string(i));
  cols.push_back("phi");
  cols.push_back("grad_norm");

  auto out = open_out(path);
  write_header(out, cols);
  std::vector<double> row(cols.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::size_t c = 0;
    row[c++] = traj.times[k];
    for (std::size_t i = 0; i < d; ++i) row[c++] = traj.xs[k][static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < d; ++i) row[c++] = traj.vs[k][static_cast<Eigen::Index>(i)];
    row[c++] = traj.phi_vals[k];
    row[c++] = traj.grad_norms[k];
    write_row(out, row);
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const Table t = read_table_csv(path);
  const std::size_t ncol = t.columns.size();
  if (ncol < 5 || (ncol - 3) % 2 != 0 || t.columns.front() != "t" || t.columns[ncol - 2] != "phi" ||
      t.columns[ncol - 1] != "grad_norm") {
    throw Error("'" + path.string() + "': header does not match t,x_*,v_*,phi,grad_norm");
  }
  const std::size_t d = (ncol - 3) / 2;
  for (std::size_t i = 0; i < d; ++i) {
    if (t.columns[1 + i] != "x_" + std::to_string(i) || t.columns[1 + d + i] != "v_" + std::to_string(i)) {
      throw Error("'" + path.string() + "': missing column x_" + std::to_string(i) + " or v_" + std::to_string(i));
    }
  }
  Trajectory traj;
  for (const auto& row : t.rows) {
    traj.times.push_back(row[0]);
    Vector x(static_cast<Eigen::Index>(d)), v(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      x[static_cast<Eigen::Index>(i)] = row[1 + i];
      v[static_cast<Eigen::Index>(i)] = row[1 + d + i];
    }
    traj.xs.push_back(std::move(x));
    traj.vs.push_back(std::move(v));
    traj.phi_vals.push_back(row[ncol - 2]);
    traj.grad_norms.push_back(row[ncol - 1]);
  }
  return traj;
}

void write_diagnostics_csv(const std::filesystem::path& path, const DiagnosticsReport& r) {
  auto out = open_out(path);
  write_header(out, {"t", "W0", "Wbeta", "E_lambda", "E_scaled", "t2_gap", "t_resid"});
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    write_row(out, {r.times[i], r.W0[i], r.Wbeta[i], r.E_lambda[i], r.E_scaled[i], r.t2_gap[i], r.t_resid[i]});
  }
}

void write_iterates_csv(const std::filesystem::path& path, const IterateHistory& h) {
  auto out = open_out(path);
  write_header(out, {"k", "t_k", "obj", "best", "prox_resid_norm"});
  for (std::size_t i = 0; i < h.size(); ++i) {
    write_row(out, {static_cast<double>(h.ks[i]), h.ts[i], h.objectives[i], h.best_so_far[i],
                    h.prox_residuals[i].norm()});
  }
}

}  // namespace dinavd
