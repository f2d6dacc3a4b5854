#pragma once

#include "core.hpp"
#include "kgrid.hpp"
#include "models.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace blochfr {

// Nearest orthonormal frame: B = U S V^dag -> U V^dag (polar factor). Errors
// out when a singular value drops below `rank_tol` (projected frame lost rank,
// i.e. the grid stepped over a region where transport is ill-posed).
inline Mat polar_orthonormalize(const Mat& B, double rank_tol) {
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() < rank_tol)
    throw grid_error("parallel transport: projected frame overlap lost rank (min sv " +
                     std::to_string(svd.singularValues().minCoeff()) + ")");
  return svd.matrixU() * svd.matrixV().adjoint();
}

// Discrete parallel transport along axis 0, one full period per base point of
// the remaining axes. Step: project the current frame with P at the next node
// and re-orthonormalize by the polar factor.
struct TransportResult {
  FrameField frame;          // full-grid transported frames, k1 in [0, 2pi)
  std::vector<Mat> end;      // frames at k1 = 2pi, indexed by base point
};

inline TransportResult parallel_transport(const ProjectorField& pf, const FrameField& slice,
                                          const Tolerances& tol = {}, int threads = 1) {
  const KGrid& g = pf.grid;
  std::size_t nbase = g.size() / g.n;
  if (slice.size() != nbase)
    throw validation_error("parallel_transport: slice frame count mismatch");
  TransportResult out;
  out.frame.resize(g.size());
  out.end.resize(nbase);
  double rank_tol = tol.get("overlap_rank");
  parallel_for(
      nbase,
      [&](std::size_t b) {
        Mat cur = slice[b];
        out.frame[b * g.n] = cur;
        for (int i = 1; i <= g.n; ++i) {
          std::size_t knext = b * g.n + (i % g.n);
          cur = polar_orthonormalize(pf.P[knext] * cur, rank_tol);
          if (i < g.n)
            out.frame[b * g.n + i] = cur;
          else
            out.end[b] = cur;
        }
      },
      threads);
  return out;
}

// Matching matrices alpha(base) = Phi(0,base)^dag Psi(2pi,base); exactly
// unitary up to roundoff since Psi(2pi) spans the same range as Phi(0).
inline std::vector<Mat> matching_matrices(const FrameField& slice,
                                          const std::vector<Mat>& end_frames) {
  std::vector<Mat> alpha(slice.size());
  for (std::size_t b = 0; b < slice.size(); ++b) alpha[b] = slice[b].adjoint() * end_frames[b];
  return alpha;
}

// X with exp(2pi i X) = U for unitary U; eigenvalues of X lie in (-1/2, 1/2],
// branch cut at -1. If an eigenvalue sits on the cut, escape by a small phase
// rotation of U and shift back.
inline Mat holonomy_log(const Mat& U) {
  constexpr double eps0 = 1e-6;
  const double escapes[] = {0.0, eps0, 1e-3, 0.25};
  for (double eps : escapes) {
    Mat V = std::exp(I_UNIT * eps) * U;
    Eigen::ComplexSchur<Mat> schur(V);
    if (schur.info() != Eigen::Success) throw validation_error("holonomy_log: Schur failed");
    bool on_cut = false;
    Vec phases(U.rows());
    for (int i = 0; i < U.rows(); ++i) {
      cplx lam = schur.matrixT()(i, i);
      if (std::abs(lam + 1.0) < 1e-9) {
        on_cut = true;
        break;
      }
      phases(i) = std::arg(lam) / TWO_PI;
    }
    if (on_cut) continue;
    Mat X = schur.matrixU() * phases.asDiagonal() * schur.matrixU().adjoint();
    return X - (eps / TWO_PI) * Mat::Identity(U.rows(), U.cols());
  }
  throw validation_error("holonomy_log: could not move eigenvalues off the branch cut");
}

}  // namespace blochfr
