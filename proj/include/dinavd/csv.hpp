#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dinavd/dynamics.hpp"
#include "dinavd/lyapunov.hpp"
#include "dinavd/solvers.hpp"

namespace dinavd {

/// %.17g, with "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_table_csv(const std::filesystem::path& path, const Table& table);
Table read_table_csv(const std::filesystem::path& path);

/// t,x_0..x_{d-1},v_0..v_{d-1},phi,grad_norm
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// Restores times, xs, vs, phi_vals and grad_norms; gradients are left empty.
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// t,W0,Wbeta,E_lambda,E_scaled,t2_gap,t_resid
void write_diagnostics_csv(const std::filesystem::path& path, const DiagnosticsReport& report);

/// k,t_k,obj,best,prox_resid_norm
void write_iterates_csv(const std::filesystem::path& path, const IterateHistory& hist);

}  // namespace dinavd
