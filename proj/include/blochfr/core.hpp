#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace blochfr {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double PI = 3.14159265358979323846;
inline constexpr double TWO_PI = 2.0 * PI;
inline const cplx I_UNIT{0.0, 1.0};

// Error taxonomy; the CLI maps these to exit codes.
struct gap_closed_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct grid_error : std::runtime_error {  // aliasing / grid too coarse / rounding failure
  using std::runtime_error::runtime_error;
};
struct homotopy_error : std::runtime_error {  // Sard failure, antipode stuck, law violation
  using std::runtime_error::runtime_error;
};
struct validation_error : std::runtime_error {  // bad input, shape mismatch
  using std::runtime_error::runtime_error;
};

// Named tolerances, overridable from the CLI via --tol NAME=VALUE.
struct Tolerances {
  std::map<std::string, double> v{
      {"rounding", 0.05},        // |raw - nearest integer| bound for invariants
      {"unitarity", 1e-9},       // allowed deviation from unitarity along paths
      {"law_residual", 1e-8},    // quasi-periodicity law residual along paths
      {"path_step", 0.5},        // max sup-norm distance between consecutive path samples
      {"orthonormality", 1e-10}, // frame Gram residual
      {"periodicity", 1e-8},     // frame wraparound law residual
      {"span", 1e-9},            // ||P - frame frame^dagger|| (orthonormal) / Parseval residual
      {"antipode_gap", 0.1},     // min distance to -1 required for direct SU(2) contraction
      {"sard_gap", 1e-3},        // min distance from chosen sphere point to sampled image
      {"overlap_rank", 0.5},     // min singular value of transport overlaps
      {"arg_step", 0.25},        // max |phase jump| per grid step, in turns, for lifts/windings
      {"gap_min", 1e-6},         // spectral gap below this counts as closed
  };
  double get(const std::string& k) const {
    auto it = v.find(k);
    if (it == v.end()) throw validation_error("unknown tolerance: " + k);
    return it->second;
  }
  void set(const std::string& k, double val) {
    if (!v.count(k)) throw validation_error("unknown tolerance: " + k);
    v[k] = val;
  }
};

// Deterministic parallel loop: each index writes its own slot, so the result
// is identical for any thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int threads = 1) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < n; i += nt) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Round a real to the nearest integer, failing if it is not within tol.
inline long round_checked(double raw, double tol, const std::string& what) {
  double r = std::round(raw);
  if (std::abs(raw - r) > tol)
    throw grid_error(what + ": value " + std::to_string(raw) +
                     " is not within " + std::to_string(tol) + " of an integer");
  return static_cast<long>(r);
}

}  // namespace blochfr
