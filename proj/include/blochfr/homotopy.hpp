#pragma once

#include "core.hpp"
#include "degrees.hpp"
#include "kgrid.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <random>

namespace blochfr {

// ---------------------------------------------------------------------------
// Quasi-periodicity laws.
//
// All wraparound laws appearing in the construction have the form
//   f(k + 2pi e_ax) = L_ax(k)^{-1} f(k) L_ax(k),
// with L_ax(k) = diag(e^{i phi}, 1, ..., 1) and phi = sum_j W(ax,j) k_j for
// integers W (W(ax,ax) = 0). W = 0 is plain periodicity.
struct FieldLaw {
  Eigen::MatrixXi W;

  static FieldLaw trivial(int dim) {
    FieldLaw l;
    l.W = Eigen::MatrixXi::Zero(dim, dim);
    return l;
  }
  bool is_trivial() const { return W.isZero(); }
  bool axis_trivial(int ax) const { return W.row(ax).isZero(); }

  double phase(const KGrid& g, int ax, std::size_t k) const {
    double p = 0.0;
    for (int j = 0; j < g.dim; ++j)
      if (W(ax, j) != 0) p += W(ax, j) * g.coord(k, j);
    return p;
  }
  Mat L(const KGrid& g, int ax, std::size_t k, int m) const {
    Mat l = Mat::Identity(m, m);
    l(0, 0) = std::exp(I_UNIT * phase(g, ax, k));
    return l;
  }
};

// ---------------------------------------------------------------------------
// Principal log/exp for unitary matrices (eigenphases in (-pi, pi)).

inline Mat ulog(const Mat& U) {
  Eigen::ComplexSchur<Mat> schur(U);
  if (schur.info() != Eigen::Success) throw validation_error("ulog: Schur failed");
  Vec ph(U.rows());
  for (int i = 0; i < U.rows(); ++i) ph(i) = I_UNIT * std::arg(schur.matrixT()(i, i));
  return schur.matrixU() * ph.asDiagonal() * schur.matrixU().adjoint();
}

inline Mat uexp(const Mat& X) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(-I_UNIT * X));
  Vec ph = (I_UNIT * es.eigenvalues().cast<cplx>().array()).exp().matrix();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// ---------------------------------------------------------------------------
// Homotopy paths: t-samples of unitary fields under one declared law.

inline double field_dist(const UnitaryField& a, const UnitaryField& b) {
  double mx = 0.0;
  for (std::size_t k = 0; k < a.U.size(); ++k)
    mx = std::max(mx, (a.U[k] - b.U[k]).operatorNorm());
  return mx;
}

struct HomotopyPath {
  KGrid grid;
  FieldLaw law;
  std::vector<UnitaryField> samples;

  const UnitaryField& start() const { return samples.front(); }
  const UnitaryField& end() const { return samples.back(); }
};

// Append a sample, thinning: drop it if it moved less than `thin` from the
// last recorded one (unless forced). Keeps per-step distances well under the
// 0.5 path invariant while bounding memory.
inline void path_append(HomotopyPath& p, const UnitaryField& u, bool force = false,
                        double thin = 0.2) {
  if (p.samples.empty() || force || field_dist(p.samples.back(), u) >= thin)
    p.samples.push_back(u);
}

inline HomotopyPath path_compose(HomotopyPath a, const HomotopyPath& b) {
  if (b.samples.empty()) return a;
  if (a.samples.empty()) return b;
  if (field_dist(a.end(), b.start()) > 1e-9)
    throw homotopy_error("path_compose: endpoint mismatch");
  a.samples.insert(a.samples.end(), b.samples.begin() + 1, b.samples.end());
  return a;
}

struct PathStats {
  double max_step = 0.0;
  double max_unitarity = 0.0;
  double max_seam_excess = 0.0;  // seam jump beyond interior modulus of continuity
};

inline PathStats validate_path(const HomotopyPath& p, const Tolerances& tol = {}) {
  PathStats st;
  const KGrid& g = p.grid;
  for (std::size_t j = 0; j < p.samples.size(); ++j) {
    const UnitaryField& u = p.samples[j];
    if (j > 0) st.max_step = std::max(st.max_step, field_dist(p.samples[j - 1], u));
    double interior = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      st.max_unitarity = std::max(
          st.max_unitarity,
          (u.U[k].adjoint() * u.U[k] - Mat::Identity(u.m(), u.m())).operatorNorm());
      for (int ax = 0; ax < g.dim; ++ax)
        if (static_cast<int>((k / g.stride(ax)) % g.n) < g.n - 1)
          interior = std::max(interior, (u.U[g.shift(k, ax, +1)] - u.U[k]).operatorNorm());
    }
    for (std::size_t k = 0; k < g.size(); ++k)
      for (int ax = 0; ax < g.dim; ++ax) {
        if (static_cast<int>((k / g.stride(ax)) % g.n) != g.n - 1) continue;
        std::size_t kw = g.shift(k, ax, +1);  // wrapped point, coordinate 0
        Mat L = p.law.L(g, ax, kw, u.m());
        double jump = (L.adjoint() * u.U[kw] * L - u.U[k]).operatorNorm();
        st.max_seam_excess = std::max(st.max_seam_excess, jump - interior);
      }
  }
  if (st.max_step >= tol.get("path_step"))
    throw homotopy_error("path invariant violated: step " + std::to_string(st.max_step));
  if (st.max_unitarity >= tol.get("unitarity"))
    throw homotopy_error("path invariant violated: unitarity " +
                         std::to_string(st.max_unitarity));
  return st;
}

// ---------------------------------------------------------------------------
// U(1) x SU(m) split.

inline std::pair<UnitaryField, UnitaryField> split_u1_su(const UnitaryField& a) {
  UnitaryField delta(a.grid, a.m()), sigma(a.grid, a.m());
  for (std::size_t k = 0; k < a.U.size(); ++k) {
    cplx det = a.U[k].determinant();
    delta.U[k] = Mat::Identity(a.m(), a.m());
    delta.U[k](0, 0) = det;
    sigma.U[k] = a.U[k];
    sigma.U[k].row(0) /= det;  // divide the first row by det(alpha)
  }
  return {delta, sigma};
}

// ---------------------------------------------------------------------------
// Sard point selection: deterministic pseudo-uniform sphere sample set; pick
// the point farthest from all sampled column values.

inline std::vector<Vec> sphere_points(int q, int count, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  std::vector<Vec> pts(count);
  for (auto& p : pts) {
    p = Vec(q);
    for (int i = 0; i < q; ++i) p(i) = cplx(nd(g), nd(g));
    p /= p.norm();
  }
  return pts;
}

// Farthest sphere point from the sampled values; `zero_first` restricts the
// candidate set to the law-invariant subsphere {first component = 0}.
inline std::pair<Vec, double> farthest_point(const std::vector<Vec>& samples, int q,
                                             bool zero_first, unsigned seed) {
  std::vector<Vec> cand = sphere_points(zero_first ? q - 1 : q, 2000, seed);
  Vec best;
  double best_gap = -1.0;
  for (auto& c : cand) {
    Vec p;
    if (zero_first) {
      p = Vec::Zero(q);
      p.tail(q - 1) = c;
    } else {
      p = c;
    }
    double gap = 2.0;
    for (const auto& s : samples) gap = std::min(gap, (s - p).norm());
    if (gap > best_gap) {
      best_gap = gap;
      best = p;
    }
  }
  return {best, best_gap};
}

// ---------------------------------------------------------------------------
// Column interpolation (diagonalization by contracting trailing columns).

namespace detail {

// SU rotation in the plane spanned by unit vectors a, b with <a,b> real > 0;
// maps a to b, smooth in (a, b) for nearby pairs, identity outside the plane.
inline Mat plane_rotation(const Vec& a, const Vec& b) {
  cplx c = a.dot(b);  // conj(a) . b
  Vec bp = b - c * a;
  double s2 = bp.squaredNorm();
  int q = static_cast<int>(a.size());
  // coefficients written via the smooth products s*aperp = bp
  double cr = c.real();
  Mat G = Mat::Identity(q, q);
  G += (cr - 1.0) * (a * a.adjoint());
  if (s2 > 1e-300) G += ((cr - 1.0) / s2) * (bp * bp.adjoint());
  G += bp * a.adjoint() - a * bp.adjoint();
  return G;
}

// One contraction of the trailing column of the leading mb x mb block toward
// a constant direction, phase-corrected so every rotation has unit det and
// real positive in-plane overlap. Returns the accumulated phase chi(k) that
// ends up on the (c,c) entry; the caller transfers it to the (0,0) entry.
struct ColumnContraction {
  Vec q_target;
  std::vector<double> chi;
};

}  // namespace detail

// Deform `f` (leading mb x mb block active, identity beyond) so that its
// block becomes diag-extended with one more trivial trailing direction.
// Appends samples to `path` and mutates `f` to the end state.
inline void contract_trailing_column(HomotopyPath& path, UnitaryField& f, int mb,
                                     const FieldLaw& law, unsigned seed,
                                     const Tolerances& tol = {}) {
  const KGrid& g = f.grid;
  int m = f.m();
  int c = mb - 1;  // active column
  bool constrain = !law.is_trivial();
  // Sampled column values inside the block.
  std::vector<Vec> vals(g.size());
  double modulus = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) vals[k] = f.U[k].col(c).head(mb);
  for (std::size_t k = 0; k < g.size(); ++k)
    for (int ax = 0; ax < g.dim; ++ax) {
      // modulus of continuity including law-corrected seam steps
      std::size_t kn = g.shift(k, ax, +1);
      Vec w = vals[kn];
      if (static_cast<int>((k / g.stride(ax)) % g.n) == g.n - 1)
        w(0) *= std::exp(-I_UNIT * law.phase(g, ax, kn));
      modulus = std::max(modulus, (w - vals[k]).norm());
    }
  auto [p, gap] = farthest_point(vals, mb, constrain, seed);
  double required = std::max(2.0 * modulus, tol.get("sard_gap"));
  if (gap <= required)
    throw homotopy_error("column interpolation: Sard gap " + std::to_string(gap) +
                         " below required " + std::to_string(required));
  Vec q = -p;  // contract toward the antipode of the missed point

  // Phase-corrected chord contraction u_t = e^{i chi} N((1-t)v + t q).
  double rate = 4.0 / std::max(gap, 0.2);
  int T = std::max(4, static_cast<int>(std::ceil(rate / 0.15)));
  std::vector<Vec> u = vals;
  std::vector<double> chi(g.size(), 0.0);
  for (int j = 1; j <= T; ++j) {
    double t = static_cast<double>(j) / T;
    UnitaryField next = f;
    for (std::size_t k = 0; k < g.size(); ++k) {
      Vec w = ((1.0 - t) * vals[k] + t * q).normalized();
      double phi = std::arg(u[k].dot(w));
      Vec wal = std::exp(-I_UNIT * phi) * w;  // realign so <u, wal> is real > 0
      Mat G = detail::plane_rotation(u[k], wal);
      next.U[k].topLeftCorner(mb, mb) = G * next.U[k].topLeftCorner(mb, mb);
      chi[k] -= phi;
      u[k] = wal;
    }
    f = next;
    path_append(path, f, j == T);
  }
  // Constant rotation carrying q to e_c (stays inside the law-invariant
  // subspace when the law is nontrivial, since then q(0) = 0 and c >= 1).
  Vec ec = Vec::Zero(mb);
  ec(c) = 1.0;
  cplx ov = q.dot(ec);
  double phi0 = std::arg(ov == cplx(0.0) ? cplx(1.0) : ov);
  Vec ecal = std::exp(-I_UNIT * phi0) * ec;
  Mat R = detail::plane_rotation(q, ecal);
  Mat X = ulog(R);
  int TR = std::max(1, static_cast<int>(std::ceil(X.operatorNorm() / 0.15)));
  UnitaryField base = f;
  for (int j = 1; j <= TR; ++j) {
    double s = static_cast<double>(j) / TR;
    Mat Gs = Mat::Identity(m, m);
    Gs.topLeftCorner(mb, mb) = uexp(Mat(s * X));
    UnitaryField next = base;
    for (std::size_t k = 0; k < g.size(); ++k) next.U[k] = Gs * base.U[k];
    f = next;
    path_append(path, f, j == TR);
  }
  // Column c is now e_c times a phase e^{i chi'}; chi' = chi - phi0 from the
  // alignment of the constant rotation target. Transfer it to entry (0,0).
  std::vector<double> chi_tot(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    cplx ph = f.U[k](c, c);
    // recover the exact phase from the field itself; chi is its smooth lift
    double lift = chi[k] - phi0;
    double snapped = lift + std::remainder(std::arg(ph) - lift, TWO_PI);
    chi_tot[k] = snapped;
  }
  double chimax = 0.0;
  for (double x : chi_tot) chimax = std::max(chimax, std::abs(x));
  int TP = std::max(1, static_cast<int>(std::ceil(chimax / 0.15)));
  UnitaryField base2 = f;
  for (int j = 1; j <= TP; ++j) {
    double s = static_cast<double>(j) / TP;
    UnitaryField next = base2;
    for (std::size_t k = 0; k < g.size(); ++k) {
      Vec dphase = Vec::Ones(m);
      dphase(0) = std::exp(I_UNIT * (s * chi_tot[k]));
      dphase(c) = std::exp(-I_UNIT * (s * chi_tot[k]));
      next.U[k] = base2.U[k] * dphase.asDiagonal();
    }
    f = next;
    path_append(path, f, j == TP);
  }
  // Snap the decoupled direction exactly.
  for (std::size_t k = 0; k < g.size(); ++k) {
    f.U[k].col(c).setZero();
    f.U[k].row(c).setZero();
    f.U[k](c, c) = 1.0;
  }
  path_append(path, f, true);
}

// Reduce a unitary field to block-diagonal form diag(B(k), 1_{m - min_block})
// by successive trailing-column contractions; min_block = 1 gives the full
// diagonalization diag(det, 1, ..., 1) (det preserved pointwise throughout).
inline HomotopyPath column_reduce(const UnitaryField& f0, const FieldLaw& law, int min_block,
                                  unsigned seed, const Tolerances& tol = {}) {
  const int max_retries = 8;
  std::mt19937_64 rg(seed * 977u + 13u);
  for (int attempt = 0;; ++attempt) {
    // Retry by conjugating with a constant law-commuting unitary
    // R = diag(1, Rt): R^-1 diag(d,1,..,1) R = diag(d,1,..,1).
    Mat R = Mat::Identity(f0.m(), f0.m());
    if (attempt > 0 && f0.m() > 1) {
      std::normal_distribution<double> nd;
      Mat A(f0.m() - 1, f0.m() - 1);
      for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) A(i, j) = cplx(nd(rg), nd(rg));
      Eigen::HouseholderQR<Mat> qr(A);
      Mat Q = qr.householderQ();
      R.bottomRightCorner(f0.m() - 1, f0.m() - 1) = Q;
    }
    try {
      HomotopyPath path;
      path.grid = f0.grid;
      path.law = law;
      UnitaryField f = f0;
      if (attempt > 0)
        for (auto& u : f.U) u = R * u * R.adjoint();
      path_append(path, f, true);
      for (int mb = f0.m(); mb > min_block; --mb)
        contract_trailing_column(path, f, mb, law, seed + 101u * attempt + mb, tol);
      if (attempt > 0)
        for (auto& s : path.samples)
          for (auto& u : s.U) u = R.adjoint() * u * R;
      return path;
    } catch (const homotopy_error&) {
      if (attempt + 1 >= max_retries) throw;
    }
  }
}

// Path from a unitary field to diagonal form diag(det, 1, ..., 1).
inline HomotopyPath column_interpolation(const UnitaryField& f0, const FieldLaw& law,
                                         unsigned seed = 1, const Tolerances& tol = {}) {
  if (f0.m() == 1) {
    HomotopyPath p;
    p.grid = f0.grid;
    p.law = law;
    p.samples = {f0};
    return p;
  }
  return column_reduce(f0, law, 1, seed, tol);
}

// ---------------------------------------------------------------------------
// Determinant unwinding: diag(f, 1, ..., 1) -> diag(e^{i sum n_j k_j}, 1, ...).

inline HomotopyPath unwind_determinant(const UnitaryField& dfield,
                                       const std::vector<long>& targets,
                                       const FieldLaw& law, const Tolerances& tol = {}) {
  const KGrid& g = dfield.grid;
  if (static_cast<int>(targets.size()) != g.dim)
    throw validation_error("unwind_determinant: need one target integer per axis");
  for (std::size_t k = 0; k < g.size(); ++k) {
    Mat off = dfield.U[k];
    off(0, 0) = 1.0;
    if ((off - Mat::Identity(dfield.m(), dfield.m())).norm() > 1e-9)
      throw validation_error("unwind_determinant: field is not diagonal-normal");
  }
  // g0 = f e^{-i sum n_j k_j} must have zero winding along every axis.
  std::vector<cplx> g0(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    double ph = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) ph += targets[ax] * g.coord(k, ax);
    g0[k] = dfield.U[k](0, 0) * std::exp(-I_UNIT * ph);
  }
  for (int ax = 0; ax < g.dim; ++ax) {
    std::vector<cplx> line(g.n);
    for (int i = 0; i < g.n; ++i) {
      std::size_t k = g.shift(0, ax, i);
      line[i] = g0[k];
    }
    if (winding_number(line, tol) != 0)
      throw homotopy_error("unwind_determinant: winding does not match target along axis " +
                           std::to_string(ax));
  }
  std::vector<double> theta = lift_argument(g, g0, tol);
  double c0 = std::arg(g0[0]);
  double span = std::abs(c0);
  for (double t : theta) span = std::max(span, TWO_PI * std::abs(t) + std::abs(c0));
  int T = std::max(1, static_cast<int>(std::ceil(span / 0.15)));
  HomotopyPath path;
  path.grid = g;
  path.law = law;
  path_append(path, dfield, true);
  for (int j = 1; j <= T; ++j) {
    double t = static_cast<double>(j) / T;
    UnitaryField u = dfield;
    for (std::size_t k = 0; k < g.size(); ++k) {
      double ph = 0.0;
      for (int ax = 0; ax < g.dim; ++ax) ph += targets[ax] * g.coord(k, ax);
      u.U[k](0, 0) = std::exp(I_UNIT * (TWO_PI * (1.0 - t) * theta[k] + (1.0 - t) * c0 + ph));
    }
    path_append(path, u, j == T);
  }
  return path;
}

// ---------------------------------------------------------------------------
// SU(2) helpers.

// Geodesic contraction samples exp((1-t) log U) of a set of SU(2) (or small
// unitary) matrices; requires the image to avoid the branch antipode -1.
inline std::vector<std::vector<Mat>> geodesic_to_one(const std::vector<Mat>& vals,
                                                     double antipode_gap) {
  double mind = 4.0, span = 0.0;
  std::vector<Mat> logs(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    mind = std::min(mind, (vals[i] + Mat::Identity(vals[i].rows(), vals[i].cols())).operatorNorm());
    logs[i] = ulog(vals[i]);
    span = std::max(span, logs[i].operatorNorm());
  }
  if (mind <= antipode_gap)
    throw homotopy_error("contraction: field passes within " + std::to_string(mind) +
                         " of the antipode -1");
  int T = std::max(1, static_cast<int>(std::ceil(span / 0.15)));
  std::vector<std::vector<Mat>> out(T + 1);
  for (int j = 0; j <= T; ++j) {
    double t = static_cast<double>(j) / T;
    out[j].resize(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) out[j][i] = uexp(Mat((1.0 - t) * logs[i]));
  }
  return out;
}

// Contract a normalized SU(2) field of 3-degree zero to the identity.
// Direct exponential-chart contraction when the image clears the antipode;
// otherwise retry after a random constant diagonal rotation (two-leg path).
inline HomotopyPath contract_identity(const UnitaryField& eta, const FieldLaw& law,
                                      unsigned seed = 1, const Tolerances& tol = {},
                                      std::optional<long> known_degree = std::nullopt) {
  if (eta.m() != 2) throw validation_error("contract_identity: need an SU(2) field");
  if (eta.grid.dim == 3) {
    long deg = known_degree ? *known_degree : three_degree(eta, tol).rounded;
    if (deg != 0)
      throw homotopy_error("contract_identity: 3-degree " + std::to_string(deg) +
                           " obstructs contraction");
  }
  double gap = tol.get("antipode_gap");
  std::mt19937_64 rg(seed * 31337u + 7u);
  std::uniform_real_distribution<double> ud(0.0, TWO_PI);
  const int max_retries = 8;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Mat R = Mat::Identity(2, 2);
    if (attempt > 0) {
      double th = ud(rg);
      R(0, 0) = std::exp(I_UNIT * th);
      R(1, 1) = std::exp(-I_UNIT * th);
    }
    std::vector<Mat> rotated(eta.U.size());
    for (std::size_t k = 0; k < eta.U.size(); ++k) rotated[k] = R * eta.U[k];
    std::vector<std::vector<Mat>> legs;
    try {
      legs = geodesic_to_one(rotated, gap);
    } catch (const homotopy_error&) {
      continue;
    }
    HomotopyPath path;
    path.grid = eta.grid;
    path.law = law;
    for (auto& sample : legs) {
      UnitaryField u(eta.grid, 2);
      for (std::size_t k = 0; k < eta.U.size(); ++k) u.U[k] = R.adjoint() * sample[k];
      path_append(path, u, &sample == &legs.back());
    }
    if (attempt > 0) {
      // second leg: constant field R^dagger -> identity
      Mat X = ulog(R.adjoint());
      int T = std::max(1, static_cast<int>(std::ceil(X.operatorNorm() / 0.15)));
      for (int j = 1; j <= T; ++j) {
        double t = static_cast<double>(j) / T;
        UnitaryField u(eta.grid, 2);
        Mat c = uexp(Mat((1.0 - t) * X));
        for (auto& mk : u.U) mk = c;
        path_append(path, u, j == T);
      }
    }
    // snap exactly
    UnitaryField one(eta.grid, 2);
    path.samples.back() = one;
    return path;
  }
  throw homotopy_error("contract_identity: antipode still in image after retries");
}

// ---------------------------------------------------------------------------
// Boundary normalization on T^3 (skeleton induction: axis lines, then faces),
// with collar extensions into the bulk conjugated by the wraparound law on
// the upper side of each transverse axis.

namespace detail {

inline double bump(int c, int n, int w) {
  int dist = std::min(c, n - c);  // distance to the subcomplex in grid steps
  if (dist >= w) return 0.0;
  return 0.5 * (1.0 + std::cos(PI * dist / w));
}

// Interpolate a contraction-leg sample at fractional position u*(T-1)... the
// legs are geodesically close, so a local log interpolation suffices.
inline Mat leg_sample(const std::vector<std::vector<Mat>>& legs, double u, std::size_t i) {
  if (legs.size() == 1) return legs[0][i];
  double x = u * (legs.size() - 1);
  int j = std::min<int>(static_cast<int>(x), static_cast<int>(legs.size()) - 2);
  double f = x - j;
  if (f < 1e-12) return legs[j][i];
  return legs[j][i] * uexp(Mat(f * ulog(Mat(legs[j][i].adjoint() * legs[j + 1][i]))));
}

}  // namespace detail

// Extend a contraction path of the restriction to {k_ax = 0 for ax in fixed}
// into the bulk of `f`, multiplying on the left by a collared correction.
// `legs[j][i]` is the j-th sample of the deformed restriction at sub-point i;
// sub-points are indexed by the free axes in increasing order.
inline void extend_subcomplex_path(HomotopyPath& path, UnitaryField& f,
                                   const std::vector<int>& fixed,
                                   const std::vector<std::vector<Mat>>& legs,
                                   const FieldLaw& law) {
  const KGrid& g = f.grid;
  int m = f.m();
  int w = std::max(2, g.n / 4);
  std::vector<int> free_axes;
  for (int ax = 0; ax < g.dim; ++ax)
    if (std::find(fixed.begin(), fixed.end(), ax) == fixed.end()) free_axes.push_back(ax);
  // map bulk point -> restriction sub-index, bump profile, law conjugation
  std::size_t sz = g.size();
  std::vector<std::size_t> sub(sz);
  std::vector<double> prof(sz);
  std::vector<Mat> conj(sz, Mat::Identity(m, m));
  for (std::size_t k = 0; k < sz; ++k) {
    std::size_t si = 0, mult = 1;
    for (int ax : free_axes) {
      si += ((k / g.stride(ax)) % g.n) * mult;
      mult *= g.n;
    }
    sub[k] = si;
    double x = 1.0;
    Mat C = Mat::Identity(m, m);
    for (int ax : fixed) {
      int c = static_cast<int>((k / g.stride(ax)) % g.n);
      x *= detail::bump(c, g.n, w);
      if (c > g.n / 2) C = C * law.L(g, ax, k, m);  // upper collar: conjugate by the law
    }
    prof[k] = x;
    conj[k] = C;
  }
  std::vector<Mat> a0inv(legs[0].size());
  for (std::size_t i = 0; i < legs[0].size(); ++i) a0inv[i] = legs[0][i].adjoint();
  UnitaryField base = f;
  int T = static_cast<int>(legs.size()) - 1;
  for (int j = 1; j <= std::max(T, 1); ++j) {
    double s = T == 0 ? 1.0 : static_cast<double>(j) / T;
    UnitaryField next = base;
    for (std::size_t k = 0; k < sz; ++k) {
      if (prof[k] == 0.0) continue;
      Mat corr = detail::leg_sample(legs, s * prof[k], sub[k]) * a0inv[sub[k]];
      next.U[k] = conj[k].adjoint() * corr * conj[k] * base.U[k];
    }
    f = next;
    path_append(path, f, j == std::max(T, 1));
  }
}

// Restriction of a field to the subcomplex {k_ax = 0, ax in fixed}.
inline std::vector<Mat> restrict_field(const UnitaryField& f, const std::vector<int>& fixed) {
  const KGrid& g = f.grid;
  std::vector<int> free_axes;
  for (int ax = 0; ax < g.dim; ++ax)
    if (std::find(fixed.begin(), fixed.end(), ax) == fixed.end()) free_axes.push_back(ax);
  std::size_t cnt = 1;
  for (std::size_t i = 0; i < free_axes.size(); ++i) cnt *= g.n;
  std::vector<Mat> vals(cnt);
  for (std::size_t si = 0; si < cnt; ++si) {
    std::vector<int> mi(g.dim, 0);
    std::size_t q = si;
    for (int ax : free_axes) {
      mi[ax] = static_cast<int>(q % g.n);
      q /= g.n;
    }
    vals[si] = f.U[g.lin(mi)];
  }
  return vals;
}

// Deform a pseudo-periodic SU(m) field on T^3 to one equal to the identity on
// all boundary faces of the fundamental cell. For m > 2 the field is first
// reduced to a 2x2 block; the SU(2) block is then normalized by contracting
// its restrictions to the three axis lines and the three zero-faces (geodesic
// contractions fix every point already at the identity, so each stage
// preserves the previously normalized skeleton).
inline HomotopyPath normalize_boundary(const UnitaryField& sigma0, const FieldLaw& law,
                                       unsigned seed = 1, const Tolerances& tol = {}) {
  const KGrid& g = sigma0.grid;
  if (g.dim != 3) throw validation_error("normalize_boundary: field must live on T^3");
  if (sigma0.m() < 2) throw validation_error("normalize_boundary: need m >= 2");
  HomotopyPath path;
  path.grid = g;
  path.law = law;
  UnitaryField f = sigma0;
  path_append(path, f, true);
  if (f.m() > 2) {
    HomotopyPath red = column_reduce(sigma0, law, 2, seed, tol);
    f = red.end();
    path = std::move(red);
  }
  const int m = f.m();
  double gap = tol.get("antipode_gap");
  // Run the skeleton stages on the SU(2) block so that the antipode guard
  // sees the actual S^3 geometry (the trailing identity block would mask it).
  UnitaryField g2(g, 2);
  for (std::size_t k = 0; k < g.size(); ++k) g2.U[k] = f.U[k].topLeftCorner(2, 2);
  HomotopyPath path2;
  path2.grid = g;
  path2.law = law;
  path_append(path2, g2, true);
  // Lines, then faces. Geodesic-to-one legs are rel-{already identity}.
  std::vector<std::vector<int>> stages = {{1, 2}, {0, 2}, {0, 1}, {0}, {1}, {2}};
  for (const auto& fixed : stages) {
    std::vector<Mat> vals = restrict_field(g2, fixed);
    double dist = 0.0;
    for (const auto& v : vals) dist = std::max(dist, (v - Mat::Identity(2, 2)).operatorNorm());
    if (dist < 1e-12) continue;
    auto legs = geodesic_to_one(vals, gap);
    extend_subcomplex_path(path2, g2, fixed, legs, law);
  }
  for (std::size_t j = 1; j < path2.samples.size(); ++j) {
    UnitaryField u(g, m);
    for (std::size_t k = 0; k < g.size(); ++k)
      u.U[k].topLeftCorner(2, 2) = path2.samples[j].U[k];
    path_append(path, u, j + 1 == path2.samples.size());
  }
  for (std::size_t k = 0; k < g.size(); ++k) f.U[k].topLeftCorner(2, 2) = g2.U[k];
  // Verify and snap the boundary to the exact identity.
  double resid = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto mi = g.multi(k);
    if (mi[0] != 0 && mi[1] != 0 && mi[2] != 0) continue;
    resid = std::max(resid, (f.U[k] - Mat::Identity(f.m(), f.m())).operatorNorm());
  }
  if (resid > 1e-6)
    throw homotopy_error("normalize_boundary: residual " + std::to_string(resid) +
                         " on the boundary skeleton");
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto mi = g.multi(k);
    if (mi[0] == 0 || mi[1] == 0 || mi[2] == 0) f.U[k] = Mat::Identity(f.m(), f.m());
  }
  path_append(path, f, true);
  return path;
}

// Reduce a normalized SU(m) field on T^3 to eta + 1_{m-2} block form and
// extract the SU(2) block (3-degree is carried entirely by the block).
inline std::pair<HomotopyPath, UnitaryField> reduce_to_su2(const UnitaryField& sigma,
                                                           const FieldLaw& law,
                                                           unsigned seed = 1,
                                                           const Tolerances& tol = {}) {
  HomotopyPath path;
  if (sigma.m() == 2) {
    path.grid = sigma.grid;
    path.law = law;
    path.samples = {sigma};
    return {path, sigma};
  }
  path = column_reduce(sigma, law, 2, seed, tol);
  UnitaryField eta(sigma.grid, 2);
  for (std::size_t k = 0; k < sigma.U.size(); ++k)
    eta.U[k] = path.end().U[k].topLeftCorner(2, 2);
  return {path, eta};
}

// ---------------------------------------------------------------------------
// The degree-n reference SU(2) field on T^3 (identity on the cell boundary):
// cube -> ball radially, ball/boundary -> S^3, wrap the (x0, x1) circle n
// times, embed S^3 as y0 + i y.tau.

inline UnitaryField make_eta4d(const KGrid& g, long n) {
  if (g.dim != 3) throw validation_error("make_eta4d: field lives on T^3");
  UnitaryField eta(g, 2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    // radial profile: 20-norm radius with a mild trigonometric reshaping,
    // tuned for quadrature accuracy of the centered-difference 3-degree
    double u[3], rp = 0.0, r2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      u[a] = (g.coord(k, a) - PI) / PI;
      rp += std::pow(u[a] * u[a], 10);
      r2 += u[a] * u[a];
    }
    double rho = std::min(1.0, std::pow(rp, 0.05));
    double s = rho - 0.10 * std::sin(PI * rho) + 0.06 * std::sin(TWO_PI * rho);
    double x0, x[3] = {0.0, 0.0, 0.0};
    if (r2 < 1e-300) {
      x0 = -1.0;
    } else {
      double rr = std::sqrt(r2);
      x0 = -std::cos(PI * s);
      double sn = std::sin(PI * s);
      for (int a = 0; a < 3; ++a) x[a] = sn * u[a] / rr;
    }
    // wrap the (x0, x1) plane n times: w -> (w/r)^{-n} r with w = x0 + i x1
    // (the -n orientation makes the n = 1 field have 3-degree +1)
    cplx w(x0, x[0]);
    double r = std::abs(w);
    cplx wn;
    if (n == 0) {
      wn = r;
    } else if (r < 1e-300) {
      wn = 0.0;
    } else {
      cplx base = n > 0 ? std::conj(w) : w;
      wn = std::pow(base / r, std::abs(static_cast<double>(n))) * r;
    }
    double y0 = wn.real(), y1 = wn.imag(), y2 = x[1], y3 = x[2];
    Mat q(2, 2);
    q << cplx(y0, y3), cplx(y2, y1), cplx(-y2, y1), cplx(y0, -y3);
    eta.U[k] = q;
  }
  return eta;
}

// ---------------------------------------------------------------------------
// Gauge field from a homotopy: beta(k1, base) = alpha(base)^{-1} alpha_t(base)
// at t = ease(k1/2pi), so beta(0) = 1 and applying beta to the transported
// frame turns its matching field into the path end.

// C-infinity monotone step on [0, 1]: every derivative vanishes at both ends,
// so the composite interpolation is smooth across segment nodes and across
// the k1 = 0 seam despite the piecewise-geodesic sampling.
inline double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

namespace detail {

inline Mat geo_mid(const Mat& a, const Mat& b) {
  return a * uexp(Mat(0.5 * ulog(Mat(a.adjoint() * b))));
}

}  // namespace detail

inline UnitaryField gauge_from_homotopy(const HomotopyPath& path, const KGrid& full_grid) {
  const KGrid& bg = path.grid;
  if (full_grid.dim != bg.dim + 1 || full_grid.n != bg.n)
    throw validation_error("gauge_from_homotopy: grid mismatch");
  int m = path.start().m();
  UnitaryField beta(full_grid, m);
  // The raw sample polyline has O(step^2) corners at sample granularity that
  // would leak a flat high-frequency tail into the gauge. Subdivide with
  // geodesic midpoints until the t-resolution is finer than the k1 grid, then
  // damp the corners with endpoint-pinned geodesic averaging passes.
  std::vector<UnitaryField> s = path.samples;
  while (static_cast<int>(s.size()) - 1 < 2 * full_grid.n && s.size() > 1) {
    std::vector<UnitaryField> r;
    r.reserve(2 * s.size());
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
      r.push_back(s[j]);
      UnitaryField mid(bg, m);
      for (std::size_t b = 0; b < bg.size(); ++b)
        mid.U[b] = detail::geo_mid(s[j].U[b], s[j + 1].U[b]);
      r.push_back(std::move(mid));
    }
    r.push_back(s.back());
    s = std::move(r);
  }
  for (int pass = 0; pass < 4 && s.size() > 2; ++pass) {
    std::vector<UnitaryField> r = s;
    for (std::size_t j = 1; j + 1 < s.size(); ++j)
      for (std::size_t b = 0; b < bg.size(); ++b)
        r[j].U[b] = detail::geo_mid(detail::geo_mid(s[j - 1].U[b], s[j + 1].U[b]), s[j].U[b]);
    s = std::move(r);
  }
  int T = static_cast<int>(s.size()) - 1;
  for (std::size_t k = 0; k < full_grid.size(); ++k) {
    std::size_t i1 = k % full_grid.n;       // axis-0 index
    std::size_t b = k / full_grid.n;        // base index
    double x = static_cast<double>(i1) / full_grid.n;
    double t = smooth_step(x);
    Mat at;
    if (T == 0) {
      at = s[0].U[b];
    } else {
      double y = t * T;
      int j = std::min<int>(static_cast<int>(y), T - 1);
      double ffrac = y - j;
      at = s[j].U[b];
      if (ffrac > 1e-12)
        at = at * uexp(Mat(ffrac * ulog(Mat(at.adjoint() * s[j + 1].U[b]))));
    }
    beta.U[k] = i1 == 0 ? Mat::Identity(m, m) : Mat(s[0].U[b].adjoint() * at);
  }
  return beta;
}

}  // namespace blochfr
