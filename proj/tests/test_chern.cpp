#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <blochfr/chern.hpp>

#include "test_util.hpp"

using namespace blochfr;

namespace {
InvariantReport invariants(const std::string& name, std::map<std::string, double> params,
                           int n) {
  ModelSpec ms = model_from_name(name, params);
  ProjectorField pf = build_projector_field(ms, KGrid(ms.dim, n));
  return compute_invariants(ms, pf);
}
}  // namespace

TEST_CASE("plaquette and curvature first Chern numbers agree across the qwz phases") {
  // Oracle: the plaquette sum is exactly integer and gauge independent; the
  // curvature quadrature must reproduce it after rounding.
  std::map<double, long> observed;
  for (double u : {-3.0, -1.0, 1.0, 3.0}) {
    auto rep = invariants("qwz", {{"u", u}}, 24);
    CHECK(rep.c1.size() == 1);
    CHECK(rep.c1[0].second.rounded == rep.c1_fhs[0].second);
    CHECK(std::abs(rep.c1[0].second.raw - rep.c1_fhs[0].second) < 0.02);
    observed[u] = rep.c1_fhs[0].second;
  }
  // Trivial phases outside |u| = 2, opposite unit values inside.
  CHECK(observed[-3.0] == 0);
  CHECK(observed[3.0] == 0);
  CHECK(std::abs(observed[1.0]) == 1);
  CHECK(observed[-1.0] == -observed[1.0]);
}

TEST_CASE("qwz Chern values are stable against grid refinement") {
  for (double u : {-1.0, 1.0}) {
    auto coarse = invariants("qwz", {{"u", u}}, 16);
    auto fine = invariants("qwz", {{"u", u}}, 48);
    CHECK(coarse.c1_fhs[0].second == fine.c1_fhs[0].second);
    CHECK(coarse.c1[0].second.rounded == fine.c1[0].second.rounded);
  }
}

TEST_CASE("weak3d carries exactly one nonzero planar Chern number") {
  auto rep = invariants("weak3d", {{"u", 1.0}}, 16);
  CHECK(rep.c1.size() == 3);
  long c12 = 0, others = 0;
  for (std::size_t i = 0; i < rep.c1.size(); ++i) {
    CHECK(rep.c1[i].second.rounded == rep.c1_fhs[i].second);
    if (rep.c1[i].first == std::vector<int>({0, 1}))
      c12 = rep.c1[i].second.rounded;
    else
      others += std::abs(rep.c1[i].second.rounded);
  }
  CHECK(std::abs(c12) == 1);
  CHECK(others == 0);
}

TEST_CASE("fhs is base-plane independent") {
  ModelSpec ms = model_from_name("weak3d", {});
  ProjectorField pf = build_projector_field(ms, KGrid(3, 10));
  long v0 = fhs_chern1(pf, {0, 1}, {0, 0, 0});
  long v1 = fhs_chern1(pf, {0, 1}, {0, 0, 4});
  CHECK(v0 == v1);
}

TEST_CASE("dirac4d second Chern numbers across mass windows") {
  // Constants pinned by a mass scan at n = 12 cross-checked at n = 16: the
  // windows (0,2), (2,4) carry c2 = +3, -1 in this gamma-matrix convention,
  // mirrored under m0 -> -m0, and zero beyond |m0| = 4. All six planar
  // plaquette sums vanish.
  std::map<double, long> expect{{1.0, 3}, {-1.0, -3}, {3.0, -1}, {-3.0, 1}, {6.0, 0}};
  for (auto [m0, want] : expect) {
    auto rep = invariants("dirac4d", {{"m0", m0}}, 12);
    for (std::size_t i = 0; i < rep.c1.size(); ++i) {
      CHECK(rep.c1[i].second.rounded == 0);
      CHECK(rep.c1_fhs[i].second == 0);
    }
    REQUIRE(rep.has_c2);
    CHECK(rep.c2.rounded == want);
  }
}

TEST_CASE("dirac4d c2 quadrature converges with order >= 2") {
  auto raw = [](int n) {
    ModelSpec ms = model_from_name("dirac4d", {{"m0", 3.0}});
    ProjectorField pf = build_projector_field(ms, KGrid(4, n));
    Mat v = integrate(chern_form(berry_curvature(pf), 2), {0, 1, 2, 3}, {0, 0, 0, 0});
    return v(0, 0).real();
  };
  double e8 = std::abs(raw(8) + 1.0);
  double e12 = std::abs(raw(12) + 1.0);
  double e16 = std::abs(raw(16) + 1.0);
  CHECK(e12 < e8 / 2.25);   // at least h^2 between n=8 and n=12
  CHECK(e16 < e12 / 1.77);  // and between n=12 and n=16
  CHECK(e12 < 0.05);
}

TEST_CASE("c2 form of a single occupied band vanishes pointwise") {
  ModelSpec ms = model_from_name("weak4d", {});
  ProjectorField pf = build_projector_field(ms, KGrid(4, 6));
  FormField F = berry_curvature(pf);
  FormField c2f = chern_form(F, 2);
  CHECK(sup_norm(c2f) < 1e-12);
}

TEST_CASE("berry connection of an explicit rank-1 frame") {
  // phi(k) = e^{i k} v: A_1 = (1/2pi) sin(h)/h with centered differences.
  KGrid g(1, 16);
  FrameField fr(g.size());
  Vec v(2);
  v << 1.0, 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    fr[k] = std::exp(I_UNIT * g.coord(k, 0)) * v;
  FormField A = berry_connection(g, fr);
  double expect = std::sin(g.h()) / g.h() / TWO_PI;
  CHECK(A.coef[0][3](0, 0).real() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(A.coef[0][3](0, 0).imag()) < 1e-14);
}

TEST_CASE("curvature trace is gauge independent") {
  ModelSpec ms = model_from_name("qwz", {});
  ProjectorField pf = build_projector_field(ms, KGrid(2, 10));
  FormField c1a = chern_form(berry_curvature(pf), 1);
  // re-gauge the stored frames by a random unitary field
  UnitaryField gauge = testutil::random_smooth_unitary(pf.grid, pf.m, 77);
  for (std::size_t k = 0; k < pf.grid.size(); ++k) pf.frame[k] = pf.frame[k] * gauge.U[k];
  FormField c1b = chern_form(berry_curvature(pf), 1);
  CHECK(sup_norm(c1a - c1b) < 1e-10);
}
