#pragma once

#include "core.hpp"
#include "kgrid.hpp"
#include "models.hpp"

#include <json.hpp>

namespace blochfr {

// A frame field: one norb x M matrix of column vectors per grid point.
using FrameField = std::vector<Mat>;

// Five-point centered derivative along `mu` of a matrix field on the grid.
// Fourth-order accurate; the quadratures of the resulting connection and
// curvature then converge fast enough for coarse-grid invariant rounding,
// while identity residuals stay dominated by the second-order form-level d.
template <class Field>
inline Mat centered_diff(const KGrid& g, const Field& f, std::size_t k, int mu) {
  if (g.n >= 7) {
    return (1.0 / (60.0 * g.h())) *
           (f[g.shift(k, mu, +3)] - 9.0 * f[g.shift(k, mu, +2)] +
            45.0 * f[g.shift(k, mu, +1)] - 45.0 * f[g.shift(k, mu, -1)] +
            9.0 * f[g.shift(k, mu, -2)] - f[g.shift(k, mu, -3)]);
  }
  if (g.n >= 5) {
    return (1.0 / (12.0 * g.h())) *
           (-f[g.shift(k, mu, +2)] + 8.0 * f[g.shift(k, mu, +1)] -
            8.0 * f[g.shift(k, mu, -1)] + f[g.shift(k, mu, -2)]);
  }
  return (1.0 / (2.0 * g.h())) * (f[g.shift(k, mu, +1)] - f[g.shift(k, mu, -1)]);
}

// Berry connection of a frame, A_mu = (1/2pi i) Phi^dag d_mu Phi (centered
// differences). Meaningful when the frame is smooth and periodic on the grid.
inline FormField berry_connection(const KGrid& grid, const FrameField& frame) {
  int M = static_cast<int>(frame[0].cols());
  FormField A(grid, 1, M);
  double inv2h = 1.0 / (2.0 * grid.h());
  for (int mu = 0; mu < grid.dim; ++mu) {
    int s = A.set_index({mu});
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::size_t kp = grid.shift(k, mu, +1), km = grid.shift(k, mu, -1);
      A.coef[s][k] =
          (1.0 / (TWO_PI * I_UNIT)) * inv2h * (frame[k].adjoint() * (frame[kp] - frame[km]));
    }
  }
  return A;
}

// Berry curvature in the basis of the given frame (defaults to the raw
// eigenframe): F_{mu nu} = (1/2pi i) Phi^dag [d_mu P, d_nu P] Phi. Depends on
// the frame only by conjugation, so traces of powers are gauge invariant.
inline FormField berry_curvature(const ProjectorField& pf) {
  const KGrid& g = pf.grid;
  FormField F(g, 2, pf.m);
  for (auto& mus : F.sets) {
    int mu = mus[0], nu = mus[1];
    int s = F.set_index(mus);
    for (std::size_t k = 0; k < g.size(); ++k) {
      Mat dmu = centered_diff(g, pf.P, k, mu);
      Mat dnu = centered_diff(g, pf.P, k, nu);
      Mat comm = dmu * dnu - dnu * dmu;
      F.coef[s][k] = (1.0 / (TWO_PI * I_UNIT)) * (pf.frame[k].adjoint() * comm * pf.frame[k]);
    }
  }
  return F;
}

// First or second Chern form of a curvature 2-form:
// c1 = Tr F,  c2 = (1/2)[Tr F ^ Tr F - Tr(F ^ F)].
inline FormField chern_form(const FormField& F, int order) {
  if (order == 1) return trace(F);
  if (order == 2) {
    FormField t = trace(F);
    return 0.5 * (wedge(t, t) - trace(wedge(F, F)));
  }
  throw validation_error("chern_form: order must be 1 or 2");
}

struct ChernValue {
  double raw = 0.0;
  long rounded = 0;
};

// Integrate a Chern form over the sub-torus spanned by `axes` through `base`
// and round to the nearest integer within the rounding tolerance.
inline ChernValue chern_number(const FormField& cform, const std::vector<int>& axes,
                               const std::vector<int>& base, const Tolerances& tol = {}) {
  Mat v = integrate(cform, axes, base);
  ChernValue out;
  out.raw = v(0, 0).real();
  if (std::abs(v(0, 0).imag()) > 1e-6)
    throw grid_error("chern_number: integral has a non-negligible imaginary part");
  out.rounded = round_checked(out.raw, tol.get("rounding"), "chern_number");
  return out;
}

// Plaquette link-variable first Chern number on the (axes[0], axes[1])
// sub-torus through `base`: exactly integer-valued and gauge independent.
inline long fhs_chern1(const ProjectorField& pf, const std::vector<int>& axes,
                       const std::vector<int>& base) {
  if (axes.size() != 2) throw validation_error("fhs_chern1: need two axes");
  const KGrid& g = pf.grid;
  int a1 = axes[0], a2 = axes[1];
  auto link = [&](std::size_t k, int ax) -> cplx {
    cplx u = (pf.frame[k].adjoint() * pf.frame[g.shift(k, ax, +1)]).determinant();
    if (std::abs(u) < 1e-12) throw grid_error("fhs_chern1: singular link overlap");
    return u / std::abs(u);
  };
  double total = 0.0;
  std::vector<int> mi = base;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      mi[a1] = i;
      mi[a2] = j;
      std::size_t k = g.lin(mi);
      cplx loop = link(k, a1) * link(g.shift(k, a1, +1), a2) /
                  (link(g.shift(k, a2, +1), a1) * link(k, a2));
      total += std::arg(loop);
    }
  double raw = total / TWO_PI;
  return round_checked(raw, 1e-6, "fhs_chern1");
}

// Chern-Simons 3-form of a connection/curvature pair in the same gauge:
// CS = (1/2)[Tr A ^ Tr F - Tr(F ^ A - (2pi i/3) A ^ A ^ A)].
inline FormField chern_simons(const FormField& A, const FormField& F) {
  FormField tA = trace(A), tF = trace(F);
  FormField AA = wedge(A, A);
  return 0.5 * (wedge(tA, tF) - trace(wedge(F, A)) +
                (TWO_PI * I_UNIT / 3.0) * trace(wedge(AA, A)));
}

// All first Chern numbers (every coordinate 2-plane through base 0), plus the
// second Chern number when dim = 4.
struct InvariantReport {
  std::string model;
  int dim = 0;
  int n = 0;
  double min_gap = 0.0;
  // keyed by axis pairs, 1-based in the written report
  std::vector<std::pair<std::vector<int>, ChernValue>> c1;
  std::vector<std::pair<std::vector<int>, long>> c1_fhs;
  bool has_c2 = false;
  ChernValue c2;
};

inline InvariantReport compute_invariants(const ModelSpec& ms, const ProjectorField& pf,
                                          const Tolerances& tol = {}) {
  InvariantReport rep;
  rep.model = ms.name;
  rep.dim = pf.grid.dim;
  rep.n = pf.grid.n;
  rep.min_gap = pf.gap.min_gap;
  std::vector<int> base(pf.grid.dim, 0);
  FormField F = berry_curvature(pf);
  FormField c1f = chern_form(F, 1);
  for (auto& pair : index_sets(pf.grid.dim, 2)) {
    rep.c1.push_back({pair, chern_number(c1f, pair, base, tol)});
    rep.c1_fhs.push_back({pair, fhs_chern1(pf, pair, base)});
  }
  if (pf.grid.dim == 4) {
    rep.has_c2 = true;
    rep.c2 = chern_number(chern_form(F, 2), {0, 1, 2, 3}, base, tol);
  }
  return rep;
}

inline nlohmann::json invariant_report_json(const InvariantReport& rep) {
  nlohmann::json j;
  j["model"] = rep.model;
  j["dim"] = rep.dim;
  j["grid_n"] = rep.n;
  j["min_gap"] = rep.min_gap;
  j["c1"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.c1.size(); ++i) {
    nlohmann::json e;
    e["axes"] = {rep.c1[i].first[0] + 1, rep.c1[i].first[1] + 1};
    e["raw"] = rep.c1[i].second.raw;
    e["value"] = rep.c1[i].second.rounded;
    e["fhs"] = rep.c1_fhs[i].second;
    j["c1"].push_back(e);
  }
  if (rep.has_c2) {
    j["c2"] = {{"axes", {1, 2, 3, 4}}, {"raw", rep.c2.raw}, {"value", rep.c2.rounded}};
  }
  return j;
}

}  // namespace blochfr
