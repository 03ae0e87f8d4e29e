#include "vemrb/rb_online.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include <Eigen/LU>

#include "vemrb/error.hpp"

namespace vemrb {

std::vector<std::array<double, 3>> laplace_coefficients(const AffineMap& map) {
  std::vector<std::array<double, 3>> c;
  c.reserve(static_cast<std::size_t>(map.size()));
  for (int i = 0; i < map.size(); ++i) c.push_back(sym_coeffs(map.matrix(i), map.det_inv_abs(i)));
  return c;
}

void reduced_system(const RBDatabase& db, const std::vector<std::array<double, 3>>& c, int j, int M, Mat& a, Vec& f) {
  using Block = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0,
                           Eigen::OuterStride<>>;
  a.setZero(M, M);
  f.setZero(M);
  for (int i = 0; i < db.n; ++i) {
    for (int nu = 1; nu <= 3; ++nu) {
      const double cv = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(nu - 1)];
      // row l (test), column l' (trial): A(j, j, l', l)
      a.noalias() += cv * Block(db.A.data() + db.a_block(i, nu, j, j), M, M, Eigen::OuterStride<>(db.m_max)).transpose();
      f.noalias() -= cv * Eigen::Map<const Vec>(db.F.data() + db.f_block(i, nu, j, j), M);
    }
  }
}

bool solve_reduced(const Mat& a, const Vec& f, Vec& w) {
  const Eigen::Index M = a.rows();
  if (M == 0) {
    w.resize(0);
    return false;
  }
  Eigen::PartialPivLU<Mat> lu(a);
  const double anorm = a.norm();
  bool shifted = false;
  Mat used = a;
  if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < 1e-13 * anorm) {
    used.diagonal().array() += 1e-12 * a.trace() / static_cast<double>(M);
    lu.compute(used);
    shifted = true;
  }
  w = lu.solve(f);
  const double res = (used * w - f).norm();
  const double scale = used.norm() * w.norm() + f.norm();
  if (!w.allFinite() || res > 1e-10 * scale) {
    fail(ErrorCode::kReducedSolverFailure, "reduced system residual " + std::to_string(res / scale));
  }
  return shifted;
}

RBBasisEval reduced_solve(const Polygon& p, const RBDatabase& db, int M) {
  if (p.size() != db.n) {
    fail(ErrorCode::kNoDatabaseForN, "no database for N=" + std::to_string(p.size()));
  }
  if (M < 0 || M > db.m_max) fail(ErrorCode::kInvalidArgument, "M outside [0, M_max]");
  RBBasisEval eval;
  const NormalizedPolygon np = normalize(p);
  eval.polygon = np.polygon;
  eval.similarity = np.similarity;
  eval.map = build_affine_map(eval.polygon);
  eval.M = M;
  eval.db = &db;
  eval.coeffs.setZero(M, db.n);
  const auto c = laplace_coefficients(eval.map);
  Mat a;
  Vec f;
  Vec w;
  for (int j = 0; j < db.n; ++j) {
    reduced_system(db, c, j, M, a, f);
    try {
      if (solve_reduced(a, f, w)) {
        ++eval.regularized;
        std::cerr << "warning: Tikhonov shift applied to reduced system of vertex " << j << '\n';
      }
    } catch (const Error& e) {
      fail(ErrorCode::kReducedSolverFailure, std::string(e.what()) + " for vertex " + std::to_string(j));
    }
    eval.coeffs.col(j) = w;
  }
  return eval;
}

Vec reconstruct_on_reference(const RBBasisEval& eval, int j) {
  const RBDatabase& db = *eval.db;
  if (j < 0 || j >= db.n) fail(ErrorCode::kInvalidArgument, "vertex index out of range");
  Vec out = db.liftings[static_cast<std::size_t>(j)];
  if (eval.M > 0) out.noalias() += db.basis[static_cast<std::size_t>(j)].leftCols(eval.M) * eval.coeffs.col(j);
  return out;
}

Vec evaluate_physical(const RBBasisEval& eval, int j, std::span<const Point> points) {
  const Vec field = reconstruct_on_reference(eval, j);
  std::vector<Point> ref;
  ref.reserve(points.size());
  for (const Point& x : points) ref.push_back(eval.map.to_reference(eval.similarity.to_normalized(x)));
  return interpolate(eval.db->ref_mesh, field, ref);
}

TriMesh pulled_back_mesh(const RBBasisEval& eval, const Polygon& physical) {
  return triangulate_level(Polygon(physical.vertices(), eval.similarity.center), eval.db->ref_mesh.level);
}

}  // namespace vemrb
