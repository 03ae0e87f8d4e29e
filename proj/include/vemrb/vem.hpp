#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vemrb/femcore.hpp"
#include "vemrb/polymesh.hpp"
#include "vemrb/rb_database_io.hpp"
#include "vemrb/rb_online.hpp"

namespace vemrb {

struct DiffusionProblem {
  std::string name;
  Mat2 K = Mat2::Identity();
  std::function<double(const Point&)> f;
  std::function<double(const Point&)> g;
  std::optional<ExactFunction> exact;
};

/// Pi^nabla of the lowest-order local space in the centered form
/// Pi e_j (x) = c_j + grad_j . (x - x_c), x_c the boundary centroid.
struct LocalProjector {
  double area = 0.0;
  double perimeter = 0.0;
  Point x_c = Point::Zero();
  std::vector<Point> grads;
  Vec consts;
  Vec boundary_weights;  // int_{dK} e_j = (|e_{j-1}| + |e_j|) / 2
  Mat D;                 // D(i, j) = Pi e_j (v_i)
};

LocalProjector local_projector(const Polygon& cell);

/// Value of Pi^nabla v at x for the dof vector of v.
double projector_value(const LocalProjector& pr, const Vec& dofs, const Point& x);
Point projector_gradient(const LocalProjector& pr, const Vec& dofs);

/// Row i (test), column j (trial): |K| K grad Pi e_j . grad Pi e_i.
Mat local_consistency(const LocalProjector& pr, const Mat2& K);
Mat stab_dofi_dofi(const LocalProjector& pr);
Mat stab_drecipe(const LocalProjector& pr, const Mat2& K);

/// K^rb(a, b) = a^K(e^rb_b, e^rb_a) assembled from the bricks with the
/// coefficients of |det B^-1| B K B^T on the normalized polygon.
Mat rb_energy_matrix(const RBBasisEval& eval, const Mat2& K);
/// R^T K^rb R on the cell.
Mat stab_rb(const Polygon& cell, const LocalProjector& pr, const Mat2& K, const RBDatabase& db, int M);

/// F_h^K(e_j) = |dK|^-1 int_K f int_{dK} e_j.
Vec local_rhs(const Polygon& cell, const LocalProjector& pr, const std::function<double(const Point&)>& f);
/// int_K f by the 3-point edge-midpoint rule on the fan triangles.
double cell_integral(const Polygon& cell, const std::function<double(const Point&)>& f);

enum class StabKind { kDofi, kDrecipe, kRb };
enum class FallbackPolicy { kError, kDofi };

struct StabConfig {
  StabKind kind = StabKind::kDofi;
  int M = 1;
  const DatabaseSet* dbs = nullptr;
  FallbackPolicy fallback = FallbackPolicy::kError;
};

StabConfig parse_stab(const std::string& text);  // dofi | drecipe | rb | rb:<M>
std::string stab_name(const StabConfig& s);

struct VemSolution {
  Vec dofs;
  SpMat interior_matrix;
  std::vector<int> interior;
  double residual = 0.0;
  int downgraded_cells = 0;
  bool symmetric = true;
};

VemSolution assemble_and_solve(const PolyMesh& mesh, const DiffusionProblem& prob, const StabConfig& stab);

struct ConditionEstimate {
  double kappa = 0.0;
  double largest = 0.0;
  double smallest = 0.0;
};

/// Power iteration for the largest eigenvalue (singular value if not
/// symmetric), inverse iteration with one factorization for the smallest.
ConditionEstimate condition_estimate(const SpMat& a, bool symmetric, double tol = 1e-6, int max_iter = 20000);

}  // namespace vemrb
