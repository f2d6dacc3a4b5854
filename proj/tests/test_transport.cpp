#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <blochfr/chern.hpp>
#include <blochfr/degrees.hpp>
#include <blochfr/transport.hpp>

#include "test_util.hpp"

using namespace blochfr;

TEST_CASE("transported frames stay orthonormal and in range") {
  ModelSpec ms = model_from_name("qwz", {{"u", 1.0}});
  ProjectorField pf = build_projector_field(ms, KGrid(2, 24));
  // initial frames on the k1 = 0 slice straight from the eigensolver
  std::size_t nbase = pf.grid.size() / pf.grid.n;
  FrameField slice(nbase);
  for (std::size_t b = 0; b < nbase; ++b) slice[b] = pf.frame[b * pf.grid.n];
  TransportResult tr = parallel_transport(pf, slice);
  for (std::size_t k = 0; k < pf.grid.size(); ++k) {
    CHECK((tr.frame[k].adjoint() * tr.frame[k] - Mat::Identity(pf.m, pf.m)).norm() < 1e-12);
    CHECK(((Mat::Identity(pf.norb, pf.norb) - pf.P[k]) * tr.frame[k]).norm() < 1e-12);
  }
  for (std::size_t b = 0; b < nbase; ++b)
    CHECK(((Mat::Identity(pf.norb, pf.norb) - pf.P[b * pf.grid.n]) * tr.end[b]).norm() < 1e-12);
}

TEST_CASE("matching matrices are unitary and their det winding gives the Chern number") {
  for (double u : {1.0, -1.0, 3.0}) {
    ModelSpec ms = model_from_name("qwz", {{"u", u}});
    ProjectorField pf = build_projector_field(ms, KGrid(2, 32));
    std::size_t nbase = pf.grid.size() / pf.grid.n;
    FrameField slice(nbase);
    for (std::size_t b = 0; b < nbase; ++b) slice[b] = pf.frame[b * pf.grid.n];
    TransportResult tr = parallel_transport(pf, slice);
    auto alpha = matching_matrices(slice, tr.end);
    UnitaryField af(KGrid(1, pf.grid.n), pf.m);
    for (std::size_t b = 0; b < nbase; ++b) {
      CHECK((alpha[b].adjoint() * alpha[b] - Mat::Identity(pf.m, pf.m)).norm() < 1e-10);
      af.U[b] = alpha[b];
    }
    long deg = one_degree(af, 0, {0});
    long c1 = fhs_chern1(pf, {0, 1}, {0, 0});
    CHECK(deg == c1);
  }
}

TEST_CASE("transport commutes with constant unitary re-gauging of the start frame") {
  ModelSpec ms = model_from_name("dirac4d", {{"m0", 1.0}});
  ProjectorField pf = build_projector_field(ms, KGrid(4, 4));
  std::size_t nbase = pf.grid.size() / pf.grid.n;
  FrameField slice(nbase);
  for (std::size_t b = 0; b < nbase; ++b) slice[b] = pf.frame[b * pf.grid.n];
  auto g = testutil::rng(5);
  Mat R = testutil::random_unitary(pf.m, g);
  FrameField slice2(nbase);
  for (std::size_t b = 0; b < nbase; ++b) slice2[b] = slice[b] * R;
  TransportResult a = parallel_transport(pf, slice);
  TransportResult b2 = parallel_transport(pf, slice2);
  for (std::size_t k = 0; k < pf.grid.size(); ++k)
    CHECK((a.frame[k] * R - b2.frame[k]).norm() < 1e-10);
}

TEST_CASE("holonomy log inverts the exponential with eigenphases in (-1/2, 1/2]") {
  auto g = testutil::rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    Mat U = testutil::random_unitary(3, g);
    Mat X = holonomy_log(U);
    CHECK((X - X.adjoint()).norm() < 1e-10);
    // reconstruct e^{2 pi i X}
    Eigen::SelfAdjointEigenSolver<Mat> es(X);
    Vec ph = (TWO_PI * I_UNIT * es.eigenvalues().cast<cplx>().array()).exp().matrix();
    Mat back = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    CHECK((back - U).norm() < 1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= 0.5 + 1e-12);
    CHECK(es.eigenvalues().minCoeff() > -0.5 - 1e-12);
  }
}

TEST_CASE("holonomy log escapes the branch cut") {
  Mat U(2, 2);
  U << -1.0, 0.0, 0.0, 1.0;
  Mat X = holonomy_log(U);
  Eigen::SelfAdjointEigenSolver<Mat> es(X);
  Vec ph = (TWO_PI * I_UNIT * es.eigenvalues().cast<cplx>().array()).exp().matrix();
  Mat back = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  CHECK((back - U).norm() < 1e-6);
}

TEST_CASE("rank drop in the projected overlap is detected") {
  // Propagating a frame orthogonal to the target range must fail loudly.
  KGrid g(1, 2);
  ProjectorField pf;
  pf.grid = g;
  pf.norb = 2;
  pf.m = 1;
  Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;  // ranges are orthogonal
  pf.P = {p0, p1};
  pf.frame = {p0.col(0), p1.col(1)};
  FrameField slice = {p0.col(0)};
  CHECK_THROWS_AS(parallel_transport(pf, slice), grid_error);
}
