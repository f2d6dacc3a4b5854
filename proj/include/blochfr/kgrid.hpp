#pragma once

#include "core.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>

namespace blochfr {

// Uniform periodic grid on the d-torus [0,2pi)^d, d <= 4, n points per axis.
// Axis 0 is the fastest-varying index (stride 1).
struct KGrid {
  int dim = 1;
  int n = 1;

  KGrid() = default;
  KGrid(int dim_, int n_) : dim(dim_), n(n_) {
    if (dim < 1 || dim > 4) throw validation_error("KGrid: dim must be in [1,4]");
    if (n < 1) throw validation_error("KGrid: n must be positive");
  }

  double h() const { return TWO_PI / n; }

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n);
    return s;
  }

  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(n);
    return s;
  }

  std::size_t lin(const std::vector<int>& mi) const {
    std::size_t idx = 0;
    for (int a = dim - 1; a >= 0; --a) {
      int c = ((mi[a] % n) + n) % n;
      idx = idx * n + c;
    }
    return idx;
  }

  std::vector<int> multi(std::size_t idx) const {
    std::vector<int> mi(dim);
    for (int a = 0; a < dim; ++a) {
      mi[a] = static_cast<int>(idx % n);
      idx /= n;
    }
    return mi;
  }

  // Periodic neighbor along an axis.
  std::size_t shift(std::size_t idx, int axis, int delta) const {
    std::size_t st = stride(axis);
    int c = static_cast<int>((idx / st) % n);
    int c2 = ((c + delta) % n + n) % n;
    return idx + (static_cast<std::size_t>(c2) - c) * st;
  }

  double coord(std::size_t idx, int axis) const {
    return h() * static_cast<int>((idx / stride(axis)) % n);
  }

  std::vector<double> kpoint(std::size_t idx) const {
    std::vector<double> k(dim);
    for (int a = 0; a < dim; ++a) k[a] = coord(idx, a);
    return k;
  }
};

// All strictly increasing index sets of size p drawn from {0..dim-1}, in
// lexicographic order.
inline std::vector<std::vector<int>> index_sets(int dim, int p) {
  std::vector<std::vector<int>> out;
  if (p == 0) {
    out.push_back({});
    return out;
  }
  if (p > dim) return out;
  std::vector<int> c(p);
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    out.push_back(c);
    int i = p - 1;
    while (i >= 0 && c[i] == dim - p + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < p; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

// Sign of the permutation sorting the concatenation of two disjoint ordered
// sets; 0 if they intersect.
inline int shuffle_sign(const std::vector<int>& a, const std::vector<int>& b) {
  int inv = 0;
  for (int x : a)
    for (int y : b) {
      if (x == y) return 0;
      if (x > y) ++inv;
    }
  return (inv % 2 == 0) ? 1 : -1;
}

// Matrix-valued p-form sampled on a KGrid. Coefficients are stored on ordered
// index sets: omega = sum_{I ordered} omega_I dk_I, dk_I = dk_{i1} ^ ... ^ dk_{ip}.
struct FormField {
  KGrid grid;
  int deg = 0;
  int m = 1;  // matrix dimension of each coefficient
  std::vector<std::vector<int>> sets;
  std::vector<std::vector<Mat>> coef;  // coef[set][k]

  FormField() = default;
  FormField(const KGrid& g, int deg_, int m_) : grid(g), deg(deg_), m(m_) {
    sets = index_sets(g.dim, deg);
    coef.assign(sets.size(), std::vector<Mat>(g.size(), Mat::Zero(m, m)));
  }

  int set_index(const std::vector<int>& I) const {
    for (std::size_t s = 0; s < sets.size(); ++s)
      if (sets[s] == I) return static_cast<int>(s);
    throw validation_error("FormField: no such index set");
  }

  Mat& at(int set, std::size_t k) { return coef[set][k]; }
  const Mat& at(int set, std::size_t k) const { return coef[set][k]; }
};

inline FormField operator+(const FormField& a, const FormField& b) {
  if (a.deg != b.deg || a.m != b.m || a.grid.size() != b.grid.size())
    throw validation_error("FormField sum: shape mismatch");
  FormField r = a;
  for (std::size_t s = 0; s < r.coef.size(); ++s)
    for (std::size_t k = 0; k < r.coef[s].size(); ++k) r.coef[s][k] += b.coef[s][k];
  return r;
}

inline FormField operator-(const FormField& a, const FormField& b) {
  if (a.deg != b.deg || a.m != b.m || a.grid.size() != b.grid.size())
    throw validation_error("FormField difference: shape mismatch");
  FormField r = a;
  for (std::size_t s = 0; s < r.coef.size(); ++s)
    for (std::size_t k = 0; k < r.coef[s].size(); ++k) r.coef[s][k] -= b.coef[s][k];
  return r;
}

inline FormField operator*(cplx c, const FormField& a) {
  FormField r = a;
  for (auto& per_set : r.coef)
    for (auto& mk : per_set) mk *= c;
  return r;
}

// Pointwise wedge product with matrix multiplication of coefficients.
inline FormField wedge(const FormField& a, const FormField& b) {
  if (a.grid.dim != b.grid.dim || a.grid.n != b.grid.n || a.m != b.m)
    throw validation_error("wedge: grid or matrix-size mismatch");
  FormField r(a.grid, a.deg + b.deg, a.m);
  if (a.deg + b.deg > a.grid.dim) return r;  // identically zero
  for (std::size_t sa = 0; sa < a.sets.size(); ++sa)
    for (std::size_t sb = 0; sb < b.sets.size(); ++sb) {
      int sgn = shuffle_sign(a.sets[sa], b.sets[sb]);
      if (sgn == 0) continue;
      std::vector<int> u;
      u.reserve(a.deg + b.deg);
      std::merge(a.sets[sa].begin(), a.sets[sa].end(), b.sets[sb].begin(), b.sets[sb].end(),
                 std::back_inserter(u));
      int su = r.set_index(u);
      for (std::size_t k = 0; k < a.grid.size(); ++k)
        r.coef[su][k] += static_cast<double>(sgn) * (a.coef[sa][k] * b.coef[sb][k]);
    }
  return r;
}

// Exterior derivative via centered differences; exact discrete Stokes on the
// periodic grid (full-torus integrals of d-omega telescope to zero).
inline FormField d(const FormField& a) {
  FormField r(a.grid, a.deg + 1, a.m);
  if (a.deg + 1 > a.grid.dim) return r;
  double inv2h = 1.0 / (2.0 * a.grid.h());
  for (std::size_t s = 0; s < a.sets.size(); ++s) {
    const auto& I = a.sets[s];
    for (int mu = 0; mu < a.grid.dim; ++mu) {
      if (std::find(I.begin(), I.end(), mu) != I.end()) continue;
      int pos = static_cast<int>(std::lower_bound(I.begin(), I.end(), mu) - I.begin());
      double sgn = (pos % 2 == 0) ? 1.0 : -1.0;
      std::vector<int> u = I;
      u.insert(u.begin() + pos, mu);
      int su = r.set_index(u);
      for (std::size_t k = 0; k < a.grid.size(); ++k) {
        std::size_t kp = a.grid.shift(k, mu, +1), km = a.grid.shift(k, mu, -1);
        r.coef[su][k] += sgn * inv2h * (a.coef[s][kp] - a.coef[s][km]);
      }
    }
  }
  return r;
}

inline FormField trace(const FormField& a) {
  FormField r(a.grid, a.deg, 1);
  for (std::size_t s = 0; s < a.sets.size(); ++s)
    for (std::size_t k = 0; k < a.grid.size(); ++k)
      r.coef[s][k](0, 0) = a.coef[s][k].trace();
  return r;
}

// Integrate a p-form over the p-dimensional sub-torus spanned by `axes`
// through the point `base` (only the coordinates off `axes` matter).
inline Mat integrate(const FormField& a, const std::vector<int>& axes,
                     const std::vector<int>& base) {
  std::vector<int> I = axes;
  std::sort(I.begin(), I.end());
  if (static_cast<int>(I.size()) != a.deg)
    throw validation_error("integrate: axes count must match form degree");
  Mat acc = Mat::Zero(a.m, a.m);
  if (a.deg == 0) return a.coef[0][a.grid.lin(base)];
  int s = a.set_index(I);
  std::size_t npts = 1;
  for (std::size_t i = 0; i < I.size(); ++i) npts *= a.grid.n;
  std::vector<int> mi = base;
  for (std::size_t t = 0; t < npts; ++t) {
    std::size_t q = t;
    for (int ax : I) {
      mi[ax] = static_cast<int>(q % a.grid.n);
      q /= a.grid.n;
    }
    acc += a.coef[s][a.grid.lin(mi)];
  }
  double cell = std::pow(a.grid.h(), a.deg);
  return cell * acc;
}

// Sup norm over all coefficients (spectral norm per point).
inline double sup_norm(const FormField& a) {
  double mx = 0.0;
  for (const auto& per_set : a.coef)
    for (const auto& mk : per_set) mx = std::max(mx, mk.operatorNorm());
  return mx;
}

}  // namespace blochfr
