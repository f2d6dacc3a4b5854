#pragma once

#include "core.hpp"
#include "kgrid.hpp"

namespace blochfr {

// Unitary-matrix-valued field on a torus grid.
struct UnitaryField {
  KGrid grid;
  std::vector<Mat> U;

  UnitaryField() = default;
  UnitaryField(const KGrid& g, int m) : grid(g), U(g.size(), Mat::Identity(m, m)) {}
  int m() const { return U.empty() ? 0 : static_cast<int>(U[0].rows()); }
};

// Winding number of a cyclic sequence of phases. Errors out if any single
// step turns by a quarter turn or more (cannot distinguish aliasing).
inline long winding_number(const std::vector<cplx>& f, const Tolerances& tol = {}) {
  double max_turn = TWO_PI * tol.get("arg_step");
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    cplx a = f[i], b = f[(i + 1) % f.size()];
    if (std::abs(a) < 1e-12 || std::abs(b) < 1e-12)
      throw validation_error("winding_number: vanishing sample");
    double step = std::arg(b / a);
    if (std::abs(step) >= max_turn)
      throw grid_error("winding_number: phase step " + std::to_string(step) +
                       " exceeds the aliasing guard; refine the grid");
    total += step;
  }
  return std::lround(total / TWO_PI);
}

// Winding of det(alpha) along the grid line through `base` in direction `axis`.
inline long one_degree(const UnitaryField& a, int axis, const std::vector<int>& base,
                       const Tolerances& tol = {}) {
  std::vector<cplx> dets(a.grid.n);
  std::vector<int> mi = base;
  for (int i = 0; i < a.grid.n; ++i) {
    mi[axis] = i;
    dets[i] = a.U[a.grid.lin(mi)].determinant();
  }
  return winding_number(dets, tol);
}

// Continuous periodic argument: f(k) = e^{2pi i theta(k)} f(0) with
// theta(0) = 0, for a nowhere-vanishing phase field with zero winding along
// every axis. Errors out on aliasing or on nonzero winding.
inline std::vector<double> lift_argument(const KGrid& grid, const std::vector<cplx>& f,
                                         const Tolerances& tol = {}) {
  if (f.size() != grid.size()) throw validation_error("lift_argument: size mismatch");
  double max_turn = tol.get("arg_step");  // in turns
  std::vector<double> theta(grid.size(), 0.0);
  auto step_turns = [&](std::size_t from, std::size_t to) {
    if (std::abs(f[from]) < 1e-12 || std::abs(f[to]) < 1e-12)
      throw validation_error("lift_argument: vanishing sample");
    double s = std::arg(f[to] / f[from]) / TWO_PI;
    if (std::abs(s) >= max_turn)
      throw grid_error("lift_argument: phase step exceeds the aliasing guard");
    return s;
  };
  // Sweep in linear order: every index > 0 has a previously-visited neighbor
  // one step back along its lowest nonzero coordinate.
  for (std::size_t idx = 1; idx < grid.size(); ++idx) {
    auto mi = grid.multi(idx);
    int ax = 0;
    while (mi[ax] == 0) ++ax;
    std::size_t prev = idx - grid.stride(ax);
    theta[idx] = theta[prev] + step_turns(prev, idx);
  }
  // Global consistency: every grid edge (including wraparound) must close.
  for (std::size_t idx = 0; idx < grid.size(); ++idx)
    for (int ax = 0; ax < grid.dim; ++ax) {
      std::size_t nxt = grid.shift(idx, ax, +1);
      double r = theta[nxt] - theta[idx] - step_turns(idx, nxt);
      if (std::abs(r) > 0.25)
        throw grid_error("lift_argument: nonzero winding along axis " + std::to_string(ax));
      if (std::abs(r) > 1e-6)
        throw grid_error("lift_argument: inconsistent lift (aliasing suspected)");
    }
  return theta;
}

struct DegreeValue {
  double raw = 0.0;
  long rounded = 0;
};

// 3-degree of a unitary field on T^3:
// deg = (1/24 pi^2) int Tr[(U^{-1} dU)^3], centered differences.
inline DegreeValue three_degree(const UnitaryField& a, const Tolerances& tol = {}) {
  const KGrid& g = a.grid;
  if (g.dim != 3) throw validation_error("three_degree: field must live on T^3");
  // Aliasing guard: consecutive samples must stay close in operator norm.
  double max_step = 1.5;
  for (std::size_t k = 0; k < g.size(); ++k)
    for (int ax = 0; ax < 3; ++ax) {
      double st = (a.U[g.shift(k, ax, +1)] - a.U[k]).operatorNorm();
      if (st > max_step)
        throw grid_error("three_degree: field varies too fast for this grid (step " +
                         std::to_string(st) + ")");
    }
  double inv2h = 1.0 / (2.0 * g.h());
  static const int perm[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
  static const double sgn[6] = {1, 1, 1, -1, -1, -1};
  double total = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    Mat L[3];
    for (int ax = 0; ax < 3; ++ax)
      L[ax] = a.U[k].adjoint() * (inv2h * (a.U[g.shift(k, ax, +1)] - a.U[g.shift(k, ax, -1)]));
    cplx acc = 0.0;
    for (int p = 0; p < 6; ++p) acc += sgn[p] * (L[perm[p][0]] * L[perm[p][1]] * L[perm[p][2]]).trace();
    total += acc.real();  // the antisymmetrized trace is real for unitary U
  }
  double cell = std::pow(g.h(), 3);
  DegreeValue out;
  out.raw = total * cell / (24.0 * PI * PI);
  out.rounded = round_checked(out.raw, tol.get("rounding"), "three_degree");
  return out;
}

}  // namespace blochfr
