#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vemrb/femcore.hpp"
#include "vemrb/geometry.hpp"

namespace vemrb {

using Mat = Eigen::MatrixXd;

/// Offline product for one vertex count N.
///
/// Brick families are stored for nu = 1..4 (slot nu-1) and fan triangle i:
///   A(i,nu,j,j',l,l') = int_{T^_i} A^nu grad xi_j^l . grad xi_j'^l'
///   F(i,nu,j,j',l)    = int_{T^_i} A^nu grad xi_j^l . grad Lambda_j'
///   G(i,nu,j,j')      = int_{T^_i} A^nu grad Lambda_j . grad Lambda_j'
/// The first function is the one A^nu acts on.
struct RBDatabase {
  int n = 0;
  int P = 0;
  int m_max = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string scalar_product = "h1-seminorm";
  std::string snapshot_mesh = "matched";
  TriMesh ref_mesh;
  std::vector<Vec> liftings;  // n nodal vectors
  std::vector<Mat> basis;     // per j: num_nodes x m_max, zero on the boundary
  Vec eigenvalues;            // all P correlation eigenvalues, descending
  std::vector<double> A;
  std::vector<double> F;
  std::vector<double> G;

  std::size_t a_block(int i, int nu, int j, int jp) const {
    return ((((static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(nu - 1)) * n + j) * n + jp) *
            static_cast<std::size_t>(m_max) * m_max);
  }
  std::size_t f_block(int i, int nu, int j, int jp) const {
    return ((((static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(nu - 1)) * n + j) * n + jp) *
            static_cast<std::size_t>(m_max));
  }
  std::size_t g_index(int i, int nu, int j, int jp) const {
    return (((static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(nu - 1)) * n + j) * n + jp);
  }
  double a(int i, int nu, int j, int jp, int l, int lp) const {
    return A[a_block(i, nu, j, jp) + static_cast<std::size_t>(l) * m_max + lp];
  }
  double f(int i, int nu, int j, int jp, int l) const { return F[f_block(i, nu, j, jp) + l]; }
  double g(int i, int nu, int j, int jp) const { return G[g_index(i, nu, j, jp)]; }
};

/// Stacked snapshot matrix: column p holds, for j = 0..n-1 in turn, the
/// interior nodal values of d^_j for training polygon p.
struct SnapshotSet {
  int n = 0;
  std::vector<Polygon> polygons;
  Mat columns;
  int rejected = 0;
};

enum class SnapshotMesh { kMatched, kIndependent };

struct OfflineOptions {
  int P = 100;
  int m_max = 20;
  double delta = 0.02;
  double delta_k = 0.02;  // physical mesh size in the independent mode
  std::uint64_t seed = 1;
  SnapshotMesh mesh_mode = SnapshotMesh::kMatched;
};

/// Discrete harmonic lifting of the reference boundary hat g^_j.
Vec compute_lifting(const TriMesh& ref_mesh, int j);

/// d^_j for j = 0..n-1, each restricted to the interior nodes of ref_mesh.
/// Matched mode solves on the physical mesh with the same level as ref_mesh,
/// whose node k is the pre-image of reference node k; independent mode solves
/// on a mesh of size delta_k and interpolates at the pre-images.
std::vector<Vec> compute_snapshot(const Polygon& p, const TriMesh& ref_mesh, const std::vector<Vec>& liftings,
                                  SnapshotMesh mode = SnapshotMesh::kMatched, double delta_k = 0.02);

std::vector<int> interior_nodes(const TriMesh& m);

/// H^1_0 stiffness on interior nodes, the scalar product of the POD.
SpMat interior_stiffness(const TriMesh& m);

struct PODResult {
  Vec eigenvalues;  // all P, descending
  Mat vectors;      // P x P, sign-fixed
  Mat correlation;
};

/// Correlation C = U^T S U / P with S applied blockwise per vertex.
PODResult pod(const Mat& columns, int n, const SpMat& s_interior);

/// Basis tuples xi^l = U z_l / sqrt(P), l < m, as full nodal vectors.
std::vector<Mat> pod_basis(const Mat& columns, int n, const PODResult& pod, const TriMesh& ref_mesh, int m);

void precompute_bricks(RBDatabase& db);

struct OfflineResult {
  RBDatabase db;
  SnapshotSet snapshots;
};

OfflineResult build_database(int n, const OfflineOptions& opt);

}  // namespace vemrb
