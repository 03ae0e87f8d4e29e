#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vemrb/geometry.hpp"

namespace vemrb {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

inline constexpr std::size_t kDefaultNodeCap = 2000000;

/// Uniformly refined fan triangulation of a star-shaped polygon.
///
/// Level L splits every fan triangle (x_K, v_i, v_{i+1}) into 4^L congruent
/// triangles by repeated midpoint subdivision. With n = 2^L, fan triangle i
/// carries the lattice points x_K + (a/n)(v_i - x_K) + (b/n)(v_{i+1} - x_K),
/// a, b >= 0, a + b <= n. Node numbering depends only on (N, L), so meshes of
/// two polygons with equal N and L correspond node by node.
struct TriMesh {
  Polygon polygon;
  int level = 0;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> fan_of_triangle;
  std::vector<bool> boundary;
  std::vector<int> boundary_edge;      // polygon edge (v_k, v_{k+1}) of a boundary node, else -1
  std::vector<double> boundary_param;  // position along that edge in [0, 1)
  std::vector<int> vertex_nodes;       // node of polygon vertex k

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int subdivisions() const { return 1 << level; }
  int lattice_node(int fan, int a, int b) const;
};

std::size_t trimesh_node_count(int n_vertices, int level);
TriMesh triangulate_level(const Polygon& p, int level, std::size_t node_cap = kDefaultNodeCap);
/// Smallest level whose longest edge is <= delta.
int level_for_delta(const Polygon& p, double delta);
TriMesh triangulate(const Polygon& p, double delta, std::size_t node_cap = kDefaultNodeCap);
double max_edge_length(const TriMesh& m);
/// Debug dump in the POLYMESH v1 layout, triangles as 3-vertex cells.
void write_trimesh(std::ostream& os, const TriMesh& m);

/// P1 gradients of the three hat functions of a triangle.
std::array<Point, 3> p1_gradients(const Point& p0, const Point& p1, const Point& p2);

/// Row r, column c: |T| K grad(phi_c) . grad(phi_r).
Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2, const Mat2& K);

SpMat assemble_stiffness(const TriMesh& m, const Mat2& K = Mat2::Identity());
/// One tensor per triangle.
SpMat assemble_stiffness(const TriMesh& m, std::span<const Mat2> K);

/// Load vector of a source f by the 3-point edge-midpoint rule.
Vec assemble_load(const TriMesh& m, const std::function<double(const Point&)>& f);

/// Factorized interior system of a Dirichlet problem; the factorization is
/// reused across right-hand sides.
class DirichletSolver {
 public:
  explicit DirichletSolver(const TriMesh& m, const Mat2& K = Mat2::Identity(),
                           std::size_t cg_threshold = 400000);
  /// Reuses an assembled stiffness matrix.
  DirichletSolver(const TriMesh& m, SpMat stiffness, bool symmetric, std::size_t cg_threshold = 400000);
  ~DirichletSolver();
  DirichletSolver(DirichletSolver&&) noexcept;
  DirichletSolver& operator=(DirichletSolver&&) noexcept;

  /// `values` supplies the boundary nodal values (interior entries ignored);
  /// `load` is an assembled load vector or empty.
  Vec solve(const Vec& values, const Vec& load = Vec()) const;

  const SpMat& stiffness() const { return stiffness_; }
  const std::vector<int>& interior() const { return interior_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SpMat stiffness_;
  std::vector<int> interior_;
  std::vector<int> position_;  // node -> interior slot or -1
};

Vec solve_dirichlet(const TriMesh& m, const Mat2& K, const Vec& values, const Vec& load = Vec());

/// Nodal values of the boundary hat g_j (1 at v_j, linear along edges).
Vec hat_boundary_values(const TriMesh& m, int j);
/// Boundary nodal values of the edge-linear trace with vertex values `dofs`.
Vec trace_from_dofs(const TriMesh& m, const Vec& dofs);

/// Discrete harmonic function with boundary trace g_j.
Vec vem_basis_fe(const TriMesh& m, int j);
Vec vem_basis_fe(const Polygon& p, int j, double delta);

/// Barycentric interpolation of a nodal field. Points within 1e-10*diam of
/// the polygon are snapped; farther points raise out-of-domain.
double interpolate(const TriMesh& m, const Vec& values, const Point& x);
Vec interpolate(const TriMesh& m, const Vec& values, std::span<const Point> targets);

struct Norms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double energy = 0.0;
  double linf = 0.0;
  double h1() const;
};

/// Norms of a nodal field.
Norms field_norms(const TriMesh& m, const Vec& u, const Mat2& K = Mat2::Identity());

struct ExactFunction {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
};

/// Squared-norm integrals of u - uh and of u itself on one mesh; the energy
/// uses the symmetric part of K. Kept unreduced so cells can be summed.
struct ErrorIntegrals {
  double err_l2_sq = 0.0;
  double err_h1_semi_sq = 0.0;
  double err_energy_sq = 0.0;
  double err_max = 0.0;
  double ref_l2_sq = 0.0;
  double ref_h1_semi_sq = 0.0;
  double ref_energy_sq = 0.0;
  double ref_max = 0.0;

  ErrorIntegrals& operator+=(const ErrorIntegrals& o);
};

ErrorIntegrals error_integrals(const TriMesh& m, const Vec& uh, const ExactFunction& u,
                               const Mat2& K = Mat2::Identity());

/// Norms of u - uh (uh given by nodal values).
Norms error_norms(const TriMesh& m, const Vec& uh, const ExactFunction& u,
                  const Mat2& K = Mat2::Identity());

}  // namespace vemrb
