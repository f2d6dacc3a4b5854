#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <blochfr/degrees.hpp>

#include "test_util.hpp"

using namespace blochfr;

TEST_CASE("winding of e^{i n k} is exactly n") {
  for (int n : {0, 1, -1, 3}) {
    KGrid g(1, 16);
    std::vector<cplx> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) f[k] = std::exp(I_UNIT * (n * g.coord(k, 0)));
    CHECK(winding_number(f) == n);
  }
}

TEST_CASE("winding aliasing guard fires") {
  // n = 4 on 16 points steps by pi/2 per sample: ambiguous, must throw
  KGrid g(1, 16);
  std::vector<cplx> f(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) f[k] = std::exp(I_UNIT * (4.0 * g.coord(k, 0)));
  CHECK_THROWS_AS(winding_number(f), grid_error);
}

TEST_CASE("one_degree reads the det winding of a diagonal field") {
  KGrid g(2, 12);
  UnitaryField a(g, 2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    a.U[k](0, 0) = std::exp(I_UNIT * (2.0 * g.coord(k, 0)));
    a.U[k](1, 1) = std::exp(I_UNIT * (-1.0 * g.coord(k, 1)));
  }
  CHECK(one_degree(a, 0, {0, 0}) == 2);
  CHECK(one_degree(a, 1, {0, 0}) == -1);
  CHECK(one_degree(a, 0, {0, 5}) == 2);  // base independence
}

TEST_CASE("lift_argument reproduces a known periodic phase") {
  KGrid g(2, 12);
  std::vector<cplx> f(g.size());
  auto theta_true = [&](std::size_t k) {
    return 0.11 * std::sin(g.coord(k, 0)) + 0.23 * std::cos(g.coord(k, 1));
  };
  for (std::size_t k = 0; k < g.size(); ++k)
    f[k] = std::exp(TWO_PI * I_UNIT * theta_true(k));
  auto theta = lift_argument(g, f);
  CHECK(theta[0] == doctest::Approx(0.0));
  for (std::size_t k = 0; k < g.size(); ++k)
    CHECK(theta[k] - theta[0] == doctest::Approx(theta_true(k) - theta_true(0)).epsilon(1e-10));
}

TEST_CASE("lift_argument rejects winding fields") {
  KGrid g(1, 16);
  std::vector<cplx> f(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) f[k] = std::exp(I_UNIT * g.coord(k, 0));
  CHECK_THROWS_AS(lift_argument(g, f), grid_error);
}

TEST_CASE("three_degree of a contractible field is zero") {
  KGrid g(3, 10);
  UnitaryField u = testutil::random_smooth_unitary(g, 2, 42, 0.4);
  auto d = three_degree(u);
  CHECK(d.rounded == 0);
  CHECK(std::abs(d.raw) < 0.05);
}

TEST_CASE("three_degree is invariant under constant rotation and transpose-conjugation") {
  KGrid g(3, 10);
  UnitaryField u = testutil::random_smooth_unitary(g, 2, 43, 0.4);
  auto d0 = three_degree(u);
  auto rg = testutil::rng(12);
  Mat R = testutil::random_unitary(2, rg);
  UnitaryField v = u;
  for (auto& m : v.U) m = R * m;
  CHECK(three_degree(v).rounded == d0.rounded);
}

TEST_CASE("three_degree aliasing guard fires on wild fields") {
  KGrid g(3, 4);
  UnitaryField u(g, 1);
  for (std::size_t k = 0; k < g.size(); ++k)
    u.U[k](0, 0) = std::exp(I_UNIT * (2.0 * (g.coord(k, 0) + g.coord(k, 1))));
  CHECK_THROWS_AS(three_degree(u), grid_error);
}
