#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "singlet/analysis.hpp"
#include "singlet/collective_spin.hpp"
#include "singlet/reduced_sweep.hpp"
#include "singlet/trajectory.hpp"

namespace singlet {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Header lines `# N=<n>` and `# order=<tag>`, then n_minus,n_zero,n_plus,re,im rows.
void write_state_csv(std::ostream& out, const SpinStateVector& state);
SpinStateVector read_state_csv(std::istream& in);

/// traj_id,t,S2,singlet_overlap,n_jumps,norm
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records);
/// traj_id,seed,n_jumps,final_S2,final_overlap
void write_summary_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records);
/// t,S2,S2_stderr,singlet_overlap,n_jumps, then one column per observable
void write_average_csv(std::ostream& out, const EnsembleAverage& average, const std::vector<std::string>& names);
/// q0,xi,Gamma_over_Lambda,N,p_s,overlap,p; failed points carry nan
void write_scan_csv(std::ostream& out, const ScanResult& scan);
/// bin_center,count
void write_histogram_csv(std::ostream& out, const Histogram& histogram);
/// k,S2_eigenvalue,d_k_squared
void write_decomposition_csv(std::ostream& out, const std::vector<DickeComponent>& decomposition);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace singlet
