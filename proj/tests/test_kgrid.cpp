#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <blochfr/kgrid.hpp>

#include "test_util.hpp"

using namespace blochfr;

TEST_CASE("grid index round trips and periodic shifts") {
  KGrid g(3, 5);
  CHECK(g.size() == 125);
  for (std::size_t idx : {0ul, 17ul, 124ul, 60ul}) {
    CHECK(g.lin(g.multi(idx)) == idx);
  }
  std::size_t k = g.lin({4, 2, 0});
  CHECK(g.shift(k, 0, 1) == g.lin({0, 2, 0}));
  CHECK(g.shift(k, 1, -3) == g.lin({4, 4, 0}));
  CHECK(g.shift(k, 2, -1) == g.lin({4, 2, 4}));
  CHECK(g.coord(k, 0) == doctest::Approx(4 * g.h()));
}

TEST_CASE("index sets are lexicographic") {
  auto s = index_sets(4, 2);
  CHECK(s.size() == 6);
  CHECK(s[0] == std::vector<int>({0, 1}));
  CHECK(s[5] == std::vector<int>({2, 3}));
  CHECK(index_sets(4, 0).size() == 1);
  CHECK(index_sets(3, 3).size() == 1);
}

TEST_CASE("graded cyclicity of the trace under wedge") {
  KGrid g(3, 6);
  for (auto [p, q] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 1}}) {
    FormField a = testutil::random_trig_form(g, p, 3, 11 + p * 10 + q);
    FormField b = testutil::random_trig_form(g, q, 3, 99 + p + q * 10);
    double sgn = (p * q) % 2 == 0 ? 1.0 : -1.0;
    FormField res = trace(wedge(a, b)) - sgn * trace(wedge(b, a));
    CHECK(sup_norm(res) < 1e-12);
  }
}

TEST_CASE("trace of an even wedge power of an odd form vanishes") {
  KGrid g(4, 4);
  FormField a = testutil::random_trig_form(g, 1, 3, 5);
  CHECK(sup_norm(trace(wedge(a, a))) < 1e-12);
  KGrid g3(3, 4);
  FormField b = testutil::random_trig_form(g3, 3, 2, 7);
  // odd degree 3, squared would exceed dim; check on the 1-form squared trace again
  FormField c = testutil::random_trig_form(g3, 1, 4, 8);
  CHECK(sup_norm(trace(wedge(c, c))) < 1e-12);
}

TEST_CASE("d squares to zero exactly") {
  KGrid g(3, 8);
  FormField a = testutil::random_trig_form(g, 1, 2, 21);
  CHECK(sup_norm(d(d(a))) < 1e-12);
  FormField b = testutil::random_trig_form(g, 0, 3, 22);
  CHECK(sup_norm(d(d(b))) < 1e-12);
}

TEST_CASE("discrete Stokes: full-torus integral of an exact form vanishes") {
  KGrid g(2, 10);
  FormField a = testutil::random_trig_form(g, 1, 2, 31);
  Mat v = integrate(d(a), {0, 1}, {0, 0});
  CHECK(v.norm() < 1e-10);
  KGrid g3(3, 6);
  FormField b = testutil::random_trig_form(g3, 2, 2, 32);
  Mat v3 = integrate(d(b), {0, 1, 2}, {0, 0, 0});
  CHECK(v3.norm() < 1e-10);
}

TEST_CASE("integration is spectrally exact on trig polynomials") {
  KGrid g(2, 12);
  FormField a(g, 1, 1);
  int s0 = a.set_index({0});
  int s1 = a.set_index({1});
  for (std::size_t k = 0; k < g.size(); ++k) {
    double k0 = g.coord(k, 0), k1 = g.coord(k, 1);
    a.coef[s0][k](0, 0) = 1.0 + std::cos(k0) * std::sin(k1);
    a.coef[s1][k](0, 0) = std::sin(k1) * std::sin(k1);
  }
  // line integral of the dk0 part over the k0 circle at k1 = 0: 2pi
  KGrid line(1, 12);
  FormField f(line, 1, 1);
  for (std::size_t k = 0; k < line.size(); ++k)
    f.coef[0][k](0, 0) = 1.0 + std::cos(line.coord(k, 0));
  Mat v = integrate(f, {0}, {0});
  CHECK(v(0, 0).real() == doctest::Approx(TWO_PI).epsilon(1e-12));
}

TEST_CASE("wedge against example coefficients") {
  // (dk0 + 2 dk1) ^ (3 dk1) = 3 dk0^dk1
  KGrid g(2, 3);
  FormField a(g, 1, 1), b(g, 1, 1);
  for (std::size_t k = 0; k < g.size(); ++k) {
    a.coef[a.set_index({0})][k](0, 0) = 1.0;
    a.coef[a.set_index({1})][k](0, 0) = 2.0;
    b.coef[b.set_index({1})][k](0, 0) = 3.0;
  }
  FormField w = wedge(a, b);
  CHECK(w.coef[0][0](0, 0).real() == doctest::Approx(3.0));
  FormField w2 = wedge(b, a);
  CHECK(w2.coef[0][0](0, 0).real() == doctest::Approx(-3.0));
}
