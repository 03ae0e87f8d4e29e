#pragma once

#include <array>
#include <span>
#include <vector>

#include "vemrb/femcore.hpp"
#include "vemrb/rb_offline.hpp"

namespace vemrb {

/// Reduced coefficients w_l^{K,j} of one polygon.
struct RBBasisEval {
  Polygon polygon;          // normalized copy of the query polygon
  Similarity similarity;    // physical -> normalized
  AffineMap map;            // normalized polygon -> reference polygon
  int M = 0;
  Mat coeffs;               // M x n, column j holds w^{K,j}
  int regularized = 0;      // systems that needed the Tikhonov shift
  const RBDatabase* db = nullptr;
};

/// Coefficients of |det B_i^-1| B_i B_i^T in {A1, A2, A3}, one triple per fan triangle.
std::vector<std::array<double, 3>> laplace_coefficients(const AffineMap& map);

/// Reduced matrix and right-hand side for vertex j from the bricks.
void reduced_system(const RBDatabase& db, const std::vector<std::array<double, 3>>& c, int j, int M, Mat& a, Vec& f);

/// Dense LU with the near-singular Tikhonov fallback; returns true if the
/// shift was applied. Throws reduced-solver-failure if the residual check fails.
bool solve_reduced(const Mat& a, const Vec& f, Vec& w);

/// Normalizes p, maps it onto the reference polygon and solves the n reduced
/// systems with M basis members.
RBBasisEval reduced_solve(const Polygon& p, const RBDatabase& db, int M);

/// e^_{M,j} = Lambda^_j + sum_l w_l xi^_j^l on the reference mesh.
Vec reconstruct_on_reference(const RBBasisEval& eval, int j);

/// e^_{M,j} composed with the affine map, at points of the query polygon.
Vec evaluate_physical(const RBBasisEval& eval, int j, std::span<const Point> points);

/// Physical mesh whose node k is the pre-image of reference node k.
TriMesh pulled_back_mesh(const RBBasisEval& eval, const Polygon& physical);

}  // namespace vemrb
