#include "vemrb/rb_offline.hpp"

#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "vemrb/error.hpp"
#include "vemrb/jacobi.hpp"
#include "vemrb/parallel.hpp"

namespace vemrb {

Vec compute_lifting(const TriMesh& ref_mesh, int j) {
  return solve_dirichlet(ref_mesh, Mat2::Identity(), hat_boundary_values(ref_mesh, j));
}

std::vector<int> interior_nodes(const TriMesh& m) {
  std::vector<int> out;
  for (int v = 0; v < m.num_nodes(); ++v) {
    if (!m.boundary[static_cast<std::size_t>(v)]) out.push_back(v);
  }
  return out;
}

std::vector<Vec> compute_snapshot(const Polygon& p, const TriMesh& ref_mesh, const std::vector<Vec>& liftings,
                                  SnapshotMesh mode, double delta_k) {
  const int n = ref_mesh.polygon.size();
  if (p.size() != n) fail(ErrorCode::kInvalidArgument, "polygon and reference mesh differ in vertex count");
  const AffineMap map = build_affine_map(p);
  const std::vector<int> interior = interior_nodes(ref_mesh);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  if (mode == SnapshotMesh::kMatched) {
    const TriMesh phys = triangulate_level(p, ref_mesh.level);
    const DirichletSolver solver(phys);
    for (int j = 0; j < n; ++j) {
      const Vec e = solver.solve(hat_boundary_values(phys, j));
      Vec d(static_cast<Eigen::Index>(interior.size()));
      for (std::size_t k = 0; k < interior.size(); ++k) {
        d[static_cast<Eigen::Index>(k)] = e[interior[k]] - liftings[static_cast<std::size_t>(j)][interior[k]];
      }
      out.push_back(std::move(d));
    }
    return out;
  }
  const TriMesh phys = triangulate(p, delta_k);
  const DirichletSolver solver(phys);
  std::vector<Point> targets;
  targets.reserve(interior.size());
  for (int v : interior) targets.push_back(map.to_physical(ref_mesh.nodes[static_cast<std::size_t>(v)]));
  for (int j = 0; j < n; ++j) {
    const Vec e = solver.solve(hat_boundary_values(phys, j));
    Vec d = interpolate(phys, e, targets);
    for (std::size_t k = 0; k < interior.size(); ++k) {
      d[static_cast<Eigen::Index>(k)] -= liftings[static_cast<std::size_t>(j)][interior[k]];
    }
    out.push_back(std::move(d));
  }
  return out;
}

SpMat interior_stiffness(const TriMesh& m) {
  const SpMat full = assemble_stiffness(m);
  std::vector<int> pos(static_cast<std::size_t>(m.num_nodes()), -1);
  int ni = 0;
  for (int v = 0; v < m.num_nodes(); ++v) {
    if (!m.boundary[static_cast<std::size_t>(v)]) pos[static_cast<std::size_t>(v)] = ni++;
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < full.outerSize(); ++col) {
    const int c = pos[static_cast<std::size_t>(col)];
    if (c < 0) continue;
    for (SpMat::InnerIterator it(full, col); it; ++it) {
      const int r = pos[static_cast<std::size_t>(it.row())];
      if (r >= 0) trip.emplace_back(r, c, it.value());
    }
  }
  SpMat s(ni, ni);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

PODResult pod(const Mat& columns, int n, const SpMat& s_interior) {
  const Eigen::Index ni = s_interior.rows();
  if (columns.rows() != n * ni) fail(ErrorCode::kInvalidArgument, "snapshot matrix has wrong row count");
  const Eigen::Index P = columns.cols();
  if (P < 1) fail(ErrorCode::kInvalidArgument, "no snapshots");
  Mat c = Mat::Zero(P, P);
  for (int j = 0; j < n; ++j) {
    const auto block = columns.middleRows(j * ni, ni);
    const Mat su = s_interior * block;
    c.noalias() += block.transpose() * su;
  }
  c /= static_cast<double>(P);
  c = 0.5 * (c + c.transpose());
  const SymmetricEigen eig = jacobi_eigen(c);
  return PODResult{eig.values, eig.vectors, c};
}

std::vector<Mat> pod_basis(const Mat& columns, int n, const PODResult& pr, const TriMesh& ref_mesh, int m) {
  const std::vector<int> interior = interior_nodes(ref_mesh);
  const auto ni = static_cast<Eigen::Index>(interior.size());
  const Eigen::Index P = columns.cols();
  const Mat xi = columns * pr.vectors.leftCols(m) / std::sqrt(static_cast<double>(P));
  std::vector<Mat> basis;
  for (int j = 0; j < n; ++j) {
    Mat b = Mat::Zero(ref_mesh.num_nodes(), m);
    for (Eigen::Index k = 0; k < ni; ++k) b.row(interior[static_cast<std::size_t>(k)]) = xi.row(j * ni + k);
    basis.push_back(std::move(b));
  }
  return basis;
}

void precompute_bricks(RBDatabase& db) {
  const int n = db.n;
  const int m = db.m_max;
  const TriMesh& mesh = db.ref_mesh;
  const int nf = n * (1 + m);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat vals(mesh.num_nodes(), nf);
  for (int j = 0; j < n; ++j) {
    vals.col(j) = db.liftings[static_cast<std::size_t>(j)];
    for (int l = 0; l < m; ++l) vals.col(n + j * m + l) = db.basis[static_cast<std::size_t>(j)].col(l);
  }
  std::vector<std::vector<int>> fan_tris(static_cast<std::size_t>(n));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    fan_tris[static_cast<std::size_t>(mesh.fan_of_triangle[static_cast<std::size_t>(t)])].push_back(t);
  }
  const std::size_t mm = static_cast<std::size_t>(m) * m;
  db.A.assign(static_cast<std::size_t>(n) * 4 * n * n * mm, 0.0);
  db.F.assign(static_cast<std::size_t>(n) * 4 * n * n * m, 0.0);
  db.G.assign(static_cast<std::size_t>(n) * 4 * n * n, 0.0);
  parallel_for(n, [&](int i) {
    const auto& tris = fan_tris[static_cast<std::size_t>(i)];
    const auto nt = static_cast<Eigen::Index>(tris.size());
    Mat gx(nt, nf);
    Mat gy(nt, nf);
    for (Eigen::Index r = 0; r < nt; ++r) {
      const auto& tri = mesh.triangles[static_cast<std::size_t>(tris[static_cast<std::size_t>(r)])];
      const Point& p0 = mesh.nodes[static_cast<std::size_t>(tri[0])];
      const Point& p1 = mesh.nodes[static_cast<std::size_t>(tri[1])];
      const Point& p2 = mesh.nodes[static_cast<std::size_t>(tri[2])];
      const double area = 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
      const double w = std::sqrt(area);
      const auto g = p1_gradients(p0, p1, p2);
      gx.row(r) = w * (g[0].x() * vals.row(tri[0]) + g[1].x() * vals.row(tri[1]) + g[2].x() * vals.row(tri[2]));
      gy.row(r) = w * (g[0].y() * vals.row(tri[0]) + g[1].y() * vals.row(tri[1]) + g[2].y() * vals.row(tri[2]));
    }
    const Mat qxx = gx.transpose() * gx;
    const Mat qyy = gy.transpose() * gy;
    const Mat qxy = gx.transpose() * gy;
    auto q = [&](int nu, int a, int b) {
      switch (nu) {
        case 1: return qxx(a, b);
        case 2: return qyy(a, b);
        case 3: return qxy(a, b) + qxy(b, a);
        default: return qxy(b, a) - qxy(a, b);
      }
    };
    for (int nu = 1; nu <= 4; ++nu) {
      for (int j = 0; j < n; ++j) {
        for (int jp = 0; jp < n; ++jp) {
          db.G[db.g_index(i, nu, j, jp)] = q(nu, j, jp);
          const std::size_t fb = db.f_block(i, nu, j, jp);
          for (int l = 0; l < m; ++l) db.F[fb + static_cast<std::size_t>(l)] = q(nu, n + j * m + l, jp);
          const std::size_t ab = db.a_block(i, nu, j, jp);
          for (int l = 0; l < m; ++l) {
            for (int lp = 0; lp < m; ++lp) {
              db.A[ab + static_cast<std::size_t>(l) * m + lp] = q(nu, n + j * m + l, n + jp * m + lp);
            }
          }
        }
      }
    }
  });
}

OfflineResult build_database(int n, const OfflineOptions& opt) {
  if (n < 3) fail(ErrorCode::kInvalidArgument, "N must be >= 3");
  if (opt.P < 1 || opt.m_max < 1 || opt.m_max > opt.P) {
    fail(ErrorCode::kInvalidArgument, "need P >= M_max >= 1");
  }
  OfflineResult res;
  RBDatabase& db = res.db;
  db.n = n;
  db.P = opt.P;
  db.m_max = opt.m_max;
  db.delta = opt.delta;
  db.seed = opt.seed;
  db.snapshot_mesh = opt.mesh_mode == SnapshotMesh::kMatched ? "matched" : "independent";
  db.ref_mesh = triangulate(reference_polygon(n), opt.delta);
  for (int j = 0; j < n; ++j) db.liftings.push_back(compute_lifting(db.ref_mesh, j));

  std::seed_seq seq{static_cast<std::uint32_t>(opt.seed & 0xffffffffu), static_cast<std::uint32_t>(opt.seed >> 32),
                    static_cast<std::uint32_t>(n)};
  Rng rng(seq);
  const std::vector<int> interior = interior_nodes(db.ref_mesh);
  const auto ni = static_cast<Eigen::Index>(interior.size());
  SnapshotSet& snaps = res.snapshots;
  snaps.n = n;
  snaps.columns.resize(n * ni, opt.P);
  while (static_cast<int>(snaps.polygons.size()) < opt.P) {
    const int need = opt.P - static_cast<int>(snaps.polygons.size());
    std::vector<Polygon> batch;
    for (int k = 0; k < need; ++k) batch.push_back(generate_convex_polygon(n, rng));
    std::vector<std::optional<std::vector<Vec>>> results(batch.size());
    parallel_for(need, [&](int k) {
      try {
        results[static_cast<std::size_t>(k)] = compute_snapshot(batch[static_cast<std::size_t>(k)], db.ref_mesh,
                                                                db.liftings, opt.mesh_mode, opt.delta_k);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateTriangle && e.code() != ErrorCode::kAssemblyError &&
            e.code() != ErrorCode::kOutOfDomain) {
          throw;
        }
      }
    });
    for (int k = 0; k < need; ++k) {
      auto& r = results[static_cast<std::size_t>(k)];
      if (!r) {
        ++snaps.rejected;
        std::cerr << "warning: training polygon rejected (degenerate fan triangle)\n";
        continue;
      }
      const auto col = static_cast<Eigen::Index>(snaps.polygons.size());
      for (int j = 0; j < n; ++j) snaps.columns.block(j * ni, col, ni, 1) = (*r)[static_cast<std::size_t>(j)];
      snaps.polygons.push_back(batch[static_cast<std::size_t>(k)]);
    }
  }

  const SpMat s = interior_stiffness(db.ref_mesh);
  const PODResult pr = pod(snaps.columns, n, s);
  db.eigenvalues = pr.eigenvalues;
  db.basis = pod_basis(snaps.columns, n, pr, db.ref_mesh, opt.m_max);
  precompute_bricks(db);
  return res;
}

}  // namespace vemrb
