#include <cmath>
#include <memory>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vemrb/error.hpp"
#include "vemrb/polymesh.hpp"
#include "vemrb/problems.hpp"
#include "vemrb/rb_database_io.hpp"
#include "vemrb/rb_online.hpp"
#include "vemrb/vem.hpp"

using namespace vemrb;

namespace {

Polygon unit_square() {
  return Polygon::from_vertices({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
}

Vec linear_dofs(const Polygon& p, double a, double b, double c) {
  Vec d(p.size());
  for (int i = 0; i < p.size(); ++i) d[i] = a + b * p.vertex(i).x() + c * p.vertex(i).y();
  return d;
}

// grad Pi e_j = |K|^{-1} int_{dK} e_j n ds, edge by edge with the trapezoid rule.
std::vector<Point> boundary_gradients(const Polygon& p) {
  const double area = polygon_area(p);
  std::vector<Point> g(static_cast<std::size_t>(p.size()), Point::Zero());
  for (int e = 0; e < p.size(); ++e) {
    const Point t = p.vertex(e + 1) - p.vertex(e);
    const Point n_len(t.y(), -t.x());  // outward normal times edge length
    g[static_cast<std::size_t>(e)] += 0.5 * n_len / area;
    g[static_cast<std::size_t>(p.wrap(e + 1))] += 0.5 * n_len / area;
  }
  return g;
}

int numerical_rank(const Mat& s, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  return static_cast<int>((es.eigenvalues().array().abs() > tol * std::max(top, 1e-300)).count());
}

class VemRbTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dbs_ = new DatabaseSet();
    OfflineOptions o;
    o.P = 16;
    o.m_max = 4;
    o.delta = 0.05;
    o.seed = 2;
    for (int n = 4; n <= 12; ++n) dbs_->add(std::make_shared<RBDatabase>(build_database(n, o).db));
  }
  static void TearDownTestSuite() {
    delete dbs_;
    dbs_ = nullptr;
  }
  static DatabaseSet* dbs_;
};

DatabaseSet* VemRbTest::dbs_ = nullptr;

}  // namespace

TEST(Projector, UnitSquareExample) {
  const LocalProjector pr = local_projector(unit_square());
  Vec d(4);
  d << 0, 0, 1, 0;
  const Point g = projector_gradient(pr, d);
  EXPECT_NEAR(g.x(), 0.5, 1e-15);
  EXPECT_NEAR(g.y(), 0.5, 1e-15);
  EXPECT_NEAR(pr.area, 1.0, 1e-15);
  EXPECT_NEAR(pr.perimeter, 4.0, 1e-15);
}

TEST(Projector, ReproducesLinears) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    const Polygon p = generate_convex_polygon(3 + t % 9, rng);
    const LocalProjector pr = local_projector(p);
    const Vec d = linear_dofs(p, 0.4, 1.0, 2.0);
    EXPECT_LT((pr.D * d - d).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((projector_gradient(pr, d) - Point(1, 2)).norm(), 1e-12);
    EXPECT_NEAR(projector_value(pr, d, Point(0.1, -0.2)), 0.4 + 0.1 - 0.4, 1e-12);
    const Vec one = Vec::Ones(p.size());
    EXPECT_LT((pr.D * one - one).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT(projector_gradient(pr, one).norm(), 1e-13);
    EXPECT_LT((pr.D * pr.D - pr.D).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Projector, BoundaryMeanConstraint) {
  Rng rng(12);
  const Polygon p = generate_convex_polygon(7, rng);
  const LocalProjector pr = local_projector(p);
  const Vec d = Vec::Random(7);
  // int_{dK} Pi v = int_{dK} v with both sides edge-linear
  EXPECT_NEAR(pr.boundary_weights.dot(pr.D * d), pr.boundary_weights.dot(d), 1e-13);
}

TEST(Consistency, MatchesBoundaryIntegralOracle) {
  Rng rng(13);
  Mat2 k;
  k << 1.0, 1e-2, 5e-3, 1e-4;
  for (int t = 0; t < 20; ++t) {
    const Polygon p = t == 0 ? unit_square() : generate_convex_polygon(4 + t % 6, rng);
    const auto g = boundary_gradients(p);
    const double area = polygon_area(p);
    for (const Mat2& kk : {Mat2(Mat2::Identity()), k}) {
      const Mat c = local_consistency(local_projector(p), kk);
      for (int i = 0; i < p.size(); ++i) {
        for (int j = 0; j < p.size(); ++j) {
          EXPECT_NEAR(c(i, j), area * g[i].dot(kk * g[j]), 1e-13);
        }
      }
      EXPECT_LT(c.rowwise().sum().cwiseAbs().maxCoeff(), 1e-13);
    }
    const Mat c = local_consistency(local_projector(p), Mat2::Identity());
    EXPECT_LT((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Stabilization, DofiRankAndKernel) {
  Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    const Polygon p = generate_convex_polygon(6, rng);
    const LocalProjector pr = local_projector(p);
    const Mat s = stab_dofi_dofi(pr);
    EXPECT_EQ(numerical_rank(s, 1e-10), 3);
    EXPECT_LT((s * linear_dofs(p, 1, -2, 3)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    const Mat a = local_consistency(pr, Mat2::Identity()) + s;
    EXPECT_EQ(numerical_rank(a, 1e-10), 5);
  }
}

TEST(Stabilization, DrecipeOnSquareEqualsDofi) {
  const LocalProjector pr = local_projector(unit_square());
  EXPECT_LT((stab_drecipe(pr, Mat2::Identity()) - stab_dofi_dofi(pr)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Stabilization, DrecipeWeights) {
  Rng rng(15);
  Mat2 k = Eigen::Vector2d(50.0, 3.0).asDiagonal();
  for (int t = 0; t < 10; ++t) {
    const Polygon p = generate_convex_polygon(5 + t % 4, rng);
    const LocalProjector pr = local_projector(p);
    const Mat c = local_consistency(pr, k);
    const int n = p.size();
    const Mat r = Mat::Identity(n, n) - pr.D;
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = std::max(1.0, c(i, i));
    const Mat expect = r.transpose() * w.asDiagonal() * r;
    const Mat s = stab_drecipe(pr, k);
    EXPECT_LT((s - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.cwiseAbs().maxCoeff());
    EXPECT_LT((s * linear_dofs(p, 2, 1, -1)).cwiseAbs().maxCoeff(), 1e-11 * w.maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> es(s - stab_dofi_dofi(pr));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-11 * w.maxCoeff());
  }
}

TEST(LocalRhs, Examples) {
  const Polygon sq = unit_square();
  const LocalProjector pr = local_projector(sq);
  EXPECT_EQ(local_rhs(sq, pr, [](const Point&) { return 0.0; }).cwiseAbs().maxCoeff(), 0.0);
  const Vec x = local_rhs(sq, pr, [](const Point& p) { return p.x(); });
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(x[i], 0.125, 1e-15);
  Rng rng(16);
  for (int t = 0; t < 10; ++t) {
    const Polygon p = generate_convex_polygon(6, rng);
    const LocalProjector q = local_projector(p);
    EXPECT_NEAR(local_rhs(p, q, [](const Point&) { return 1.0; }).sum(), polygon_area(p), 1e-14);
    // quadratic source: degree-2 rule is exact
    const double ix = cell_integral(p, [](const Point& y) { return y.x() * y.x(); });
    double oracle = 0.0;
    for (int i = 0; i < 6; ++i) {
      const Point a = p.vertex(i), b = p.vertex(i + 1);
      oracle += (a.x() * b.y() - b.x() * a.y()) * (a.x() * a.x() + a.x() * b.x() + b.x() * b.x()) / 12.0;
    }
    EXPECT_NEAR(ix, oracle, 1e-14);
  }
}

TEST(Solve, SingleCellLinear) {
  PolyMesh m;
  m.vertices = {Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)};
  m.cells = {{0, 1, 2, 3}};
  finalize_mesh(m);
  const VemSolution s = assemble_and_solve(m, linear_problem(1, 2, -1), parse_stab("dofi"));
  for (int v = 0; v < 4; ++v) EXPECT_EQ(s.dofs[v], 1 + 2 * m.vertices[v].x() - m.vertices[v].y());
}

TEST(Solve, PatchDofiDrecipe) {
  Rng rng(17);
  const PolyMesh m = voronoi_mesh(60, 30, rng).mesh;
  Mat2 k;
  k << 1.0, 1e-2, 5e-3, 1e-4;
  for (const Mat2& kk : {Mat2(Mat2::Identity()), k}) {
    const DiffusionProblem prob = linear_problem(1, 2, -1, kk);
    for (const char* s : {"dofi", "drecipe"}) {
      const VemSolution sol = assemble_and_solve(m, prob, parse_stab(s));
      double err = 0.0;
      for (int v = 0; v < m.num_vertices(); ++v) err = std::max(err, std::abs(sol.dofs[v] - prob.exact->value(m.vertices[v])));
      EXPECT_LT(err, 1e-10) << s;
    }
  }
}

TEST(Solve, GlobalMatrixSymmetric) {
  Rng rng(18);
  const PolyMesh m = voronoi_mesh(40, 20, rng).mesh;
  const VemSolution sol = assemble_and_solve(m, make_problem("poisson"), parse_stab("drecipe"));
  const Mat a = Mat(sol.interior_matrix);
  EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-14 * a.cwiseAbs().maxCoeff());
  EXPECT_TRUE(sol.symmetric);
  EXPECT_LT(sol.residual, 1e-12);
}

TEST(Solve, MissingDatabaseFallback) {
  Rng rng(19);
  const PolyMesh m = voronoi_mesh(20, 10, rng).mesh;
  DatabaseSet empty;
  StabConfig s = parse_stab("rb:1");
  s.dbs = &empty;
  try {
    assemble_and_solve(m, make_problem("patch"), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoDatabaseForN);
  }
  s.fallback = FallbackPolicy::kDofi;
  const VemSolution sol = assemble_and_solve(m, make_problem("patch"), s);
  EXPECT_GT(sol.downgraded_cells, 0);
}

TEST(Stab, ParseNames) {
  EXPECT_EQ(parse_stab("dofi").kind, StabKind::kDofi);
  EXPECT_EQ(parse_stab("drecipe").kind, StabKind::kDrecipe);
  const StabConfig r = parse_stab("rb:7");
  EXPECT_EQ(r.kind, StabKind::kRb);
  EXPECT_EQ(r.M, 7);
  EXPECT_EQ(stab_name(r), "rb:7");
  EXPECT_THROW(parse_stab("bogus"), Error);
}

TEST(Condition, Examples) {
  SpMat id(10, 10);
  id.setIdentity();
  EXPECT_NEAR(condition_estimate(id, true).kappa, 1.0, 1e-6);
  SpMat d(2, 2);
  d.insert(0, 0) = 1.0;
  d.insert(1, 1) = 100.0;
  EXPECT_NEAR(condition_estimate(d, true).kappa, 100.0, 1e-4);
  const int n = 50;
  SpMat t(n, n);
  for (int i = 0; i < n; ++i) {
    t.insert(i, i) = 2.0;
    if (i > 0) t.insert(i, i - 1) = -1.0;
    if (i + 1 < n) t.insert(i, i + 1) = -1.0;
  }
  const double lmax = 2.0 - 2.0 * std::cos(n * std::numbers::pi / (n + 1));
  const double lmin = 2.0 - 2.0 * std::cos(std::numbers::pi / (n + 1));
  const double k = condition_estimate(t, true).kappa;
  EXPECT_NEAR(k, lmax / lmin, 0.01 * lmax / lmin);
  const double kn = condition_estimate(t, false).kappa;
  EXPECT_NEAR(kn, lmax / lmin, 0.01 * lmax / lmin);
}

TEST_F(VemRbTest, PatchTestAllStabilizations) {
  Rng rng(20);
  const PolyMesh m = voronoi_mesh(80, 50, rng).mesh;
  const DiffusionProblem prob = make_problem("patch");
  for (const char* name : {"dofi", "drecipe", "rb:1", "rb:4"}) {
    StabConfig s = parse_stab(name);
    s.dbs = dbs_;
    const VemSolution sol = assemble_and_solve(m, prob, s);
    double err = 0.0;
    for (int v = 0; v < m.num_vertices(); ++v) err = std::max(err, std::abs(sol.dofs[v] - prob.exact->value(m.vertices[v])));
    EXPECT_LT(err, 1e-10) << name;
    EXPECT_EQ(sol.downgraded_cells, 0);
  }
}

TEST_F(VemRbTest, RbStabilizationProperties) {
  Rng rng(21);
  Mat2 k1 = Eigen::Vector2d(1.0, 6.25e-4).asDiagonal();
  for (int t = 0; t < 10; ++t) {
    const Polygon p = generate_convex_polygon(4 + t % 6, rng);
    const RBDatabase& db = *dbs_->get(p.size());
    const LocalProjector pr = local_projector(p);
    for (const Mat2& kk : {Mat2(Mat2::Identity()), k1}) {
      const Mat s = stab_rb(p, pr, kk, db, 3);
      const double scale = s.cwiseAbs().maxCoeff();
      EXPECT_LT((s * linear_dofs(p, 1, 3, -2)).cwiseAbs().maxCoeff(), 1e-11 * scale);
      EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-11 * scale);
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * scale);
    }
  }
}

TEST_F(VemRbTest, EnergyMatrixMatchesPulledBackMesh) {
  Rng rng(22);
  Mat2 k2;
  k2 << 1.0, 1e-2, 5e-3, 1e-4;
  for (int t = 0; t < 10; ++t) {
    const Polygon p = generate_convex_polygon(4 + t % 5, rng);
    const RBDatabase& db = *dbs_->get(p.size());
    const RBBasisEval e = reduced_solve(p, db, 4);
    const TriMesh phys = pulled_back_mesh(e, p);
    Mat basis(phys.num_nodes(), p.size());
    for (int j = 0; j < p.size(); ++j) basis.col(j) = reconstruct_on_reference(e, j);
    for (const Mat2& kk : {Mat2(Mat2::Identity()), k2}) {
      const Mat direct = basis.transpose() * oracle::stiffness(phys, kk) * basis;
      const Mat krb = rb_energy_matrix(e, kk);
      EXPECT_LT((krb - direct).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, direct.cwiseAbs().maxCoeff())) << t;
    }
  }
}

// Generalized eigenvalues of S against the exact energy of (I - Pi) e_j, on the
// complement of linears.
TEST_F(VemRbTest, SpectralEquivalenceBand) {
  Rng rng(23);
  Mat2 k1 = Eigen::Vector2d(1.0, 6.25e-4).asDiagonal();
  auto band = [&](const Polygon& p, const Mat& s, const Mat& exact, const LocalProjector& pr) {
    const int n = p.size();
    const Mat r = Mat::Identity(n, n) - pr.D;
    Eigen::JacobiSVD<Mat> svd(r, Eigen::ComputeFullU);
    const Mat q = svd.matrixU().leftCols(n - 3);
    const Mat a = q.transpose() * exact * q;
    const Mat b = q.transpose() * s * q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(0.5 * (b + b.transpose()), 0.5 * (a + a.transpose()));
    return std::pair{ges.eigenvalues().minCoeff(), ges.eigenvalues().maxCoeff()};
  };
  double dofi_lo = INFINITY, dofi_hi = 0.0, dofi_k1_lo = INFINITY, dofi_k1_hi = 0.0, rb_lo = INFINITY, rb_hi = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Polygon p = generate_convex_polygon(6, rng);
    const LocalProjector pr = local_projector(p);
    const TriMesh m = triangulate_level(p, 3);
    Mat e(m.num_nodes(), 6);
    for (int j = 0; j < 6; ++j) e.col(j) = vem_basis_fe(m, j);
    const Mat exact_i = e.transpose() * oracle::stiffness(m, Mat2::Identity()) * e;
    const Mat exact_k1 = e.transpose() * oracle::stiffness(m, k1) * e;
    const auto [lo, hi] = band(p, stab_dofi_dofi(pr), exact_i, pr);
    dofi_lo = std::min(dofi_lo, lo);
    dofi_hi = std::max(dofi_hi, hi);
    const auto [lo1, hi1] = band(p, stab_dofi_dofi(pr), exact_k1, pr);
    dofi_k1_lo = std::min(dofi_k1_lo, lo1);
    dofi_k1_hi = std::max(dofi_k1_hi, hi1);
    const auto [lo2, hi2] = band(p, stab_rb(p, pr, k1, *dbs_->get(6), 4), exact_k1, pr);
    rb_lo = std::min(rb_lo, lo2);
    rb_hi = std::max(rb_hi, hi2);
  }
  RecordProperty("dofi_band", std::to_string(dofi_lo) + " " + std::to_string(dofi_hi));
  RecordProperty("rb_k1_band", std::to_string(rb_lo) + " " + std::to_string(rb_hi));
  EXPECT_GT(dofi_lo, 0.0);
  EXPECT_LT(dofi_hi / dofi_lo, 1e3);
  EXPECT_GT(rb_lo, 0.0);
  EXPECT_LT(rb_hi / rb_lo, dofi_k1_hi / dofi_k1_lo);
}
