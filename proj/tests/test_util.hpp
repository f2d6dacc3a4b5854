#pragma once

#include <blochfr/core.hpp>
#include <blochfr/kgrid.hpp>
#include <blochfr/degrees.hpp>

#include <random>

namespace testutil {

using namespace blochfr;

inline std::mt19937_64 rng(unsigned seed) { return std::mt19937_64(seed); }

inline Mat random_hermitian(int n, std::mt19937_64& g, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(nd(g), nd(g));
  return 0.5 * (A + A.adjoint());
}

inline Mat random_unitary(int n, std::mt19937_64& g) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(nd(g), nd(g));
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ();
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) Q.col(i) *= R(i, i) / std::abs(R(i, i));
  return Q;
}

// Smooth periodic Hermitian-generator field: H(k) = sum_j trig(k) H_j.
struct TrigHermitian {
  std::vector<Mat> coef_c, coef_s;  // per axis
  Mat base;
  Mat eval(const std::vector<double>& k) const {
    Mat H = base;
    for (std::size_t a = 0; a < coef_c.size(); ++a)
      H += std::cos(k[a]) * coef_c[a] + std::sin(k[a]) * coef_s[a];
    return H;
  }
};

inline TrigHermitian random_trig_hermitian(int dim, int n, std::mt19937_64& g,
                                           double scale = 0.5) {
  TrigHermitian t;
  t.base = random_hermitian(n, g, scale);
  for (int a = 0; a < dim; ++a) {
    t.coef_c.push_back(random_hermitian(n, g, scale));
    t.coef_s.push_back(random_hermitian(n, g, scale));
  }
  return t;
}

// Smooth periodic unitary field U(k) = exp(i H(k)).
inline UnitaryField random_smooth_unitary(const KGrid& grid, int m, unsigned seed,
                                          double scale = 0.5) {
  auto g = rng(seed);
  TrigHermitian t = random_trig_hermitian(grid.dim, m, g, scale);
  UnitaryField u(grid, m);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Mat> es(t.eval(grid.kpoint(k)));
    Vec ph = (I_UNIT * es.eigenvalues().cast<cplx>().array()).exp().matrix();
    u.U[k] = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  }
  return u;
}

// Random smooth matrix-valued p-form with trig-polynomial coefficients.
inline FormField random_trig_form(const KGrid& grid, int deg, int m, unsigned seed,
                                  double scale = 1.0) {
  auto g = rng(seed);
  FormField f(grid, deg, m);
  for (std::size_t s = 0; s < f.sets.size(); ++s) {
    auto t = random_trig_hermitian(grid.dim, m, g, scale);
    auto t2 = random_trig_hermitian(grid.dim, m, g, scale);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      auto kp = grid.kpoint(k);
      f.coef[s][k] = t.eval(kp) + I_UNIT * t2.eval(kp);
    }
  }
  return f;
}

}  // namespace testutil
