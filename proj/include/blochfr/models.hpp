#pragma once

#include "core.hpp"
#include "kgrid.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <string>

namespace blochfr {

// Tight-binding model: H(k) = sum_R e^{i k.R} H_R on C^norb, with the lowest
// `occupied` bands forming the Fermi projector.
struct Hopping {
  std::vector<int> R;
  Mat H;  // norb x norb block for this displacement
};

struct ModelSpec {
  std::string name = "custom";
  int dim = 0;
  int norb = 0;
  int occupied = 0;
  std::vector<Hopping> hoppings;
};

inline Mat eval_hamiltonian(const ModelSpec& ms, const std::vector<double>& k) {
  Mat H = Mat::Zero(ms.norb, ms.norb);
  for (const auto& hop : ms.hoppings) {
    double phase = 0.0;
    for (int a = 0; a < ms.dim; ++a) phase += k[a] * hop.R[a];
    H += std::exp(I_UNIT * phase) * hop.H;
  }
  return H;
}

inline void validate_model(const ModelSpec& ms) {
  if (ms.dim < 1 || ms.dim > 4) throw validation_error("model: dim must be in [1,4]");
  if (ms.norb < 1) throw validation_error("model: norb must be positive");
  if (ms.occupied < 1 || ms.occupied >= ms.norb)
    throw validation_error("model: occupied must be in [1, norb-1]");
  for (const auto& hop : ms.hoppings) {
    if (static_cast<int>(hop.R.size()) != ms.dim)
      throw validation_error("model: hopping displacement has wrong dimension");
    if (hop.H.rows() != ms.norb || hop.H.cols() != ms.norb)
      throw validation_error("model: hopping block has wrong shape");
  }
  // Hermiticity spot check at a few irrational k-points.
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> k(ms.dim);
    for (int a = 0; a < ms.dim; ++a) k[a] = std::fmod(1.234 + 0.731 * trial + 0.519 * a, 1.0) * TWO_PI;
    Mat H = eval_hamiltonian(ms, k);
    if ((H - H.adjoint()).norm() > 1e-9 * (1.0 + H.norm()))
      throw validation_error("model: H(k) is not Hermitian (hoppings must satisfy H_{-R} = H_R^dagger)");
  }
}

// ---------------------------------------------------------------------------
// Built-in models.

namespace pauli {
inline Mat s0() { return Mat::Identity(2, 2); }
inline Mat s1() { Mat m(2, 2); m << 0, 1, 1, 0; return m; }
inline Mat s2() { Mat m(2, 2); m << 0, -I_UNIT, I_UNIT, 0; return m; }
inline Mat s3() { Mat m(2, 2); m << 1, 0, 0, -1; return m; }
}  // namespace pauli

inline Mat kron(const Mat& a, const Mat& b) {
  Mat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

inline double param_or(const std::map<std::string, double>& p, const std::string& key,
                       double dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

// cos k_axis * A + sin k_axis * B as a pair of +-R hoppings.
inline void add_cos_sin(ModelSpec& ms, int axis, const Mat& A, const Mat& B) {
  Hopping plus, minus;
  plus.R.assign(ms.dim, 0);
  minus.R.assign(ms.dim, 0);
  plus.R[axis] = 1;
  minus.R[axis] = -1;
  plus.H = 0.5 * (A - I_UNIT * B);
  minus.H = 0.5 * (A + I_UNIT * B);
  ms.hoppings.push_back(plus);
  ms.hoppings.push_back(minus);
}

inline void add_onsite(ModelSpec& ms, const Mat& A) {
  Hopping h;
  h.R.assign(ms.dim, 0);
  h.H = A;
  ms.hoppings.push_back(h);
}

// 1D two-band insulator, trivially gapped, k-dependent:
// H = sin k s1 + (u + cos k) s3, |u| > 1.
inline ModelSpec model_flat1d(const std::map<std::string, double>& p) {
  double u = param_or(p, "u", 2.0);
  ModelSpec ms{"flat1d", 1, 2, 1, {}};
  add_onsite(ms, u * pauli::s3());
  add_cos_sin(ms, 0, pauli::s3(), pauli::s1());
  return ms;
}

// H = sin k1 s1 + sin k2 s2 + (u + cos k1 + cos k2) s3.
inline ModelSpec model_qwz(const std::map<std::string, double>& p) {
  double u = param_or(p, "u", 1.0);
  ModelSpec ms{"qwz", 2, 2, 1, {}};
  add_onsite(ms, u * pauli::s3());
  add_cos_sin(ms, 0, pauli::s3(), pauli::s1());
  add_cos_sin(ms, 1, pauli::s3(), pauli::s2());
  return ms;
}

// qwz in (k1,k2) plus a weak scalar dispersion along k3: the extra axis shifts
// both bands equally, so the gap and the curvature are untouched.
inline ModelSpec model_weak3d(const std::map<std::string, double>& p) {
  double u = param_or(p, "u", 1.0);
  double t3 = param_or(p, "t3", 0.2);
  ModelSpec ms{"weak3d", 3, 2, 1, {}};
  add_onsite(ms, u * pauli::s3());
  add_cos_sin(ms, 0, pauli::s3(), pauli::s1());
  add_cos_sin(ms, 1, pauli::s3(), pauli::s2());
  add_cos_sin(ms, 2, t3 * pauli::s0(), Mat::Zero(2, 2));
  return ms;
}

// weak3d with a second trivial axis: a 4D model with one nonzero first Chern
// number and vanishing second Chern form (single occupied band).
inline ModelSpec model_weak4d(const std::map<std::string, double>& p) {
  double u = param_or(p, "u", 1.0);
  double t3 = param_or(p, "t3", 0.2);
  double t4 = param_or(p, "t4", 0.15);
  ModelSpec ms{"weak4d", 4, 2, 1, {}};
  add_onsite(ms, u * pauli::s3());
  add_cos_sin(ms, 0, pauli::s3(), pauli::s1());
  add_cos_sin(ms, 1, pauli::s3(), pauli::s2());
  add_cos_sin(ms, 2, t3 * pauli::s0(), Mat::Zero(2, 2));
  add_cos_sin(ms, 3, t4 * pauli::s0(), Mat::Zero(2, 2));
  return ms;
}

// 4D Dirac model, H = sum_j sin k_j G_j + (m0 + sum_j cos k_j) G_0 with
// G_j = s1 x s_j (j=1..3), G_4 = s2 x s0, G_0 = s3 x s0. Two occupied bands.
inline ModelSpec model_dirac4d(const std::map<std::string, double>& p) {
  double m0 = param_or(p, "m0", 3.0);
  ModelSpec ms{"dirac4d", 4, 4, 2, {}};
  Mat G0 = kron(pauli::s3(), pauli::s0());
  Mat G[4] = {kron(pauli::s1(), pauli::s1()), kron(pauli::s1(), pauli::s2()),
              kron(pauli::s1(), pauli::s3()), kron(pauli::s2(), pauli::s0())};
  add_onsite(ms, m0 * G0);
  for (int j = 0; j < 4; ++j) add_cos_sin(ms, j, G0, G[j]);
  return ms;
}

inline ModelSpec model_from_name(const std::string& name,
                                 const std::map<std::string, double>& params) {
  ModelSpec ms;
  if (name == "flat1d") ms = model_flat1d(params);
  else if (name == "qwz") ms = model_qwz(params);
  else if (name == "weak3d") ms = model_weak3d(params);
  else if (name == "weak4d") ms = model_weak4d(params);
  else if (name == "dirac4d") ms = model_dirac4d(params);
  else throw validation_error("unknown built-in model: " + name);
  validate_model(ms);
  return ms;
}

// ---------------------------------------------------------------------------
// JSON model files:
// {"dim":2,"norb":2,"occupied":1,"hoppings":[{"R":[1,0],"re":[[..]],"im":[[..]]}]}

inline ModelSpec model_from_json(const nlohmann::json& j) {
  ModelSpec ms;
  try {
    ms.name = j.value("name", std::string("custom"));
    ms.dim = j.at("dim").get<int>();
    ms.norb = j.at("norb").get<int>();
    ms.occupied = j.at("occupied").get<int>();
    for (const auto& hj : j.at("hoppings")) {
      Hopping hop;
      hop.R = hj.at("R").get<std::vector<int>>();
      auto re = hj.at("re").get<std::vector<std::vector<double>>>();
      auto im = hj.at("im").get<std::vector<std::vector<double>>>();
      hop.H = Mat::Zero(ms.norb, ms.norb);
      if (static_cast<int>(re.size()) != ms.norb || static_cast<int>(im.size()) != ms.norb)
        throw validation_error("model json: hopping block has wrong shape");
      for (int r = 0; r < ms.norb; ++r) {
        if (static_cast<int>(re[r].size()) != ms.norb || static_cast<int>(im[r].size()) != ms.norb)
          throw validation_error("model json: hopping block has wrong shape");
        for (int c = 0; c < ms.norb; ++c) hop.H(r, c) = cplx(re[r][c], im[r][c]);
      }
      ms.hoppings.push_back(std::move(hop));
    }
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("model json: ") + e.what());
  }
  validate_model(ms);
  return ms;
}

inline nlohmann::json model_to_json(const ModelSpec& ms) {
  nlohmann::json j;
  j["name"] = ms.name;
  j["dim"] = ms.dim;
  j["norb"] = ms.norb;
  j["occupied"] = ms.occupied;
  j["hoppings"] = nlohmann::json::array();
  for (const auto& hop : ms.hoppings) {
    nlohmann::json hj;
    hj["R"] = hop.R;
    std::vector<std::vector<double>> re(ms.norb, std::vector<double>(ms.norb));
    std::vector<std::vector<double>> im = re;
    for (int r = 0; r < ms.norb; ++r)
      for (int c = 0; c < ms.norb; ++c) {
        re[r][c] = hop.H(r, c).real();
        im[r][c] = hop.H(r, c).imag();
      }
    hj["re"] = re;
    hj["im"] = im;
    j["hoppings"].push_back(hj);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Spectral projectors on a grid.

struct GapInfo {
  double min_gap = 0.0;
  std::size_t argmin_k = 0;
};

// Deterministic eigenvector phase: rotate the largest-magnitude component
// (lowest index on ties) to the positive real axis.
inline void fix_phase(Eigen::Ref<Vec> v) {
  int best = 0;
  double mag = std::abs(v(0));
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > mag + 1e-14) {
      mag = std::abs(v(i));
      best = i;
    }
  if (mag > 0) v *= std::conj(v(best)) / mag;
}

// Projector onto the lowest m bands plus a phase-fixed eigenframe.
inline void spectral_projector(const Mat& H, int m, Mat* P, Mat* frame, double* gap) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  if (es.info() != Eigen::Success) throw validation_error("eigensolver failed");
  const Mat& V = es.eigenvectors();
  Mat F = V.leftCols(m);
  for (int c = 0; c < m; ++c) fix_phase(F.col(c));
  if (gap) *gap = es.eigenvalues()(m) - es.eigenvalues()(m - 1);
  if (P) *P = F * F.adjoint();
  if (frame) *frame = F;
}

// Fermi projector (plus raw eigenframe) per grid point.
struct ProjectorField {
  KGrid grid;
  int norb = 0;
  int m = 0;
  std::vector<Mat> P;      // norb x norb
  std::vector<Mat> frame;  // norb x m, raw per-point eigenframe (no smoothness claim)
  GapInfo gap;

  // Restriction to the slice {k_axis0 = 0}: a field over the remaining axes.
  ProjectorField slice_first_axis() const {
    if (grid.dim < 2) throw validation_error("slice: need dim >= 2");
    ProjectorField out;
    out.grid = KGrid(grid.dim - 1, grid.n);
    out.norb = norb;
    out.m = m;
    out.gap = gap;
    std::size_t sz = out.grid.size();
    out.P.resize(sz);
    out.frame.resize(sz);
    for (std::size_t k = 0; k < sz; ++k) {
      // Slice index maps to the full-grid index with coordinate 0 on axis 0.
      std::size_t full = k * grid.n;
      out.P[k] = P[full];
      out.frame[k] = frame[full];
    }
    return out;
  }
};

inline ProjectorField build_projector_field(const ModelSpec& ms, const KGrid& grid,
                                            const Tolerances& tol = {}, int threads = 1) {
  if (grid.dim != ms.dim) throw validation_error("build_projector_field: grid dim mismatch");
  ProjectorField pf;
  pf.grid = grid;
  pf.norb = ms.norb;
  pf.m = ms.occupied;
  std::size_t sz = grid.size();
  pf.P.resize(sz);
  pf.frame.resize(sz);
  std::vector<double> gaps(sz);
  parallel_for(
      sz,
      [&](std::size_t k) {
        Mat H = eval_hamiltonian(ms, grid.kpoint(k));
        spectral_projector(H, ms.occupied, &pf.P[k], &pf.frame[k], &gaps[k]);
      },
      threads);
  pf.gap.min_gap = gaps[0];
  pf.gap.argmin_k = 0;
  for (std::size_t k = 1; k < sz; ++k)
    if (gaps[k] < pf.gap.min_gap) {
      pf.gap.min_gap = gaps[k];
      pf.gap.argmin_k = k;
    }
  if (pf.gap.min_gap < tol.get("gap_min"))
    throw gap_closed_error("spectral gap closes (min gap " + std::to_string(pf.gap.min_gap) +
                           " at grid index " + std::to_string(pf.gap.argmin_k) + ")");
  return pf;
}

}  // namespace blochfr
