#include "vemrb/vem.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "vemrb/error.hpp"
#include "vemrb/parallel.hpp"

namespace vemrb {

namespace {

Point outward(const Point& e) { return Point(e.y(), -e.x()); }

}  // namespace

LocalProjector local_projector(const Polygon& cell) {
  const int n = cell.size();
  LocalProjector pr;
  pr.area = polygon_area(cell);
  pr.perimeter = polygon_perimeter(cell);
  if (!(pr.perimeter > 0.0)) fail(ErrorCode::kInvalidArgument, "cell has zero perimeter");
  Point mom = Point::Zero();
  for (int j = 0; j < n; ++j) mom += edge_length(cell, j) * 0.5 * (cell.vertex(j) + cell.vertex(j + 1));
  pr.x_c = mom / pr.perimeter;
  pr.grads.resize(static_cast<std::size_t>(n));
  pr.consts.resize(n);
  pr.boundary_weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const Point e_prev = cell.vertex(j) - cell.vertex(j - 1);
    const Point e_next = cell.vertex(j + 1) - cell.vertex(j);
    pr.grads[static_cast<std::size_t>(j)] = (outward(e_prev) + outward(e_next)) / (2.0 * pr.area);
    pr.boundary_weights[j] = 0.5 * (e_prev.norm() + e_next.norm());
    pr.consts[j] = pr.boundary_weights[j] / pr.perimeter;
  }
  pr.D.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      pr.D(i, j) = pr.consts[j] + pr.grads[static_cast<std::size_t>(j)].dot(cell.vertex(i) - pr.x_c);
    }
  }
  return pr;
}

double projector_value(const LocalProjector& pr, const Vec& dofs, const Point& x) {
  return dofs.dot(pr.consts) + projector_gradient(pr, dofs).dot(x - pr.x_c);
}

Point projector_gradient(const LocalProjector& pr, const Vec& dofs) {
  Point g = Point::Zero();
  for (std::size_t j = 0; j < pr.grads.size(); ++j) g += dofs[static_cast<Eigen::Index>(j)] * pr.grads[j];
  return g;
}

Mat local_consistency(const LocalProjector& pr, const Mat2& K) {
  const auto n = static_cast<Eigen::Index>(pr.grads.size());
  Mat c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(i, j) = pr.area * pr.grads[static_cast<std::size_t>(i)].dot(K * pr.grads[static_cast<std::size_t>(j)]);
    }
  }
  return c;
}

Mat stab_dofi_dofi(const LocalProjector& pr) {
  const Mat r = Mat::Identity(pr.D.rows(), pr.D.cols()) - pr.D;
  return r.transpose() * r;
}

Mat stab_drecipe(const LocalProjector& pr, const Mat2& K) {
  const Mat c = local_consistency(pr, K);
  const Mat r = Mat::Identity(pr.D.rows(), pr.D.cols()) - pr.D;
  Vec w(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) w[i] = std::max(1.0, c(i, i));
  return r.transpose() * w.asDiagonal() * r;
}

Mat rb_energy_matrix(const RBBasisEval& eval, const Mat2& K) {
  const RBDatabase& db = *eval.db;
  const int n = db.n;
  const int M = eval.M;
  const Mat& w = eval.coeffs;
  Mat out = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto gamma = full_coeffs(eval.map.matrix(i), eval.map.det_inv_abs(i), K);
    for (int nu = 1; nu <= 4; ++nu) {
      const double gv = gamma[static_cast<std::size_t>(nu - 1)];
      if (gv == 0.0) continue;
      const double sign = nu == 4 ? -1.0 : 1.0;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          double s = db.g(i, nu, b, a);
          for (int l = 0; l < M; ++l) {
            s += w(l, b) * db.f(i, nu, b, a, l);
            s += sign * w(l, a) * db.f(i, nu, a, b, l);
          }
          const std::size_t blk = db.a_block(i, nu, b, a);
          for (int l = 0; l < M; ++l) {
            double t = 0.0;
            for (int lp = 0; lp < M; ++lp) t += db.A[blk + static_cast<std::size_t>(l) * db.m_max + lp] * w(lp, a);
            s += w(l, b) * t;
          }
          out(a, b) += gv * s;
        }
      }
    }
  }
  return out;
}

Mat stab_rb(const Polygon& cell, const LocalProjector& pr, const Mat2& K, const RBDatabase& db, int M) {
  const int n = cell.size();
  if (n == 3) return Mat::Zero(3, 3);
  const RBBasisEval eval = reduced_solve(cell, db, M);
  const Mat krb = rb_energy_matrix(eval, K);
  const Mat r = Mat::Identity(n, n) - pr.D;
  return r.transpose() * krb * r;
}

double cell_integral(const Polygon& cell, const std::function<double(const Point&)>& f) {
  double s = 0.0;
  const Point& c = cell.star_center();
  for (int i = 0; i < cell.size(); ++i) {
    const Point& a = cell.vertex(i);
    const Point& b = cell.vertex(i + 1);
    const double area = 0.5 * ((a - c).x() * (b - c).y() - (a - c).y() * (b - c).x());
    s += area / 3.0 * (f(0.5 * (a + b)) + f(0.5 * (b + c)) + f(0.5 * (c + a)));
  }
  return s;
}

Vec local_rhs(const Polygon& cell, const LocalProjector& pr, const std::function<double(const Point&)>& f) {
  if (!f) return Vec::Zero(cell.size());
  return cell_integral(cell, f) / pr.perimeter * pr.boundary_weights;
}

StabConfig parse_stab(const std::string& text) {
  StabConfig s;
  if (text == "dofi") {
    s.kind = StabKind::kDofi;
  } else if (text == "drecipe") {
    s.kind = StabKind::kDrecipe;
  } else if (text == "rb" || text.rfind("rb:", 0) == 0) {
    s.kind = StabKind::kRb;
    if (text.size() > 3) {
      try {
        s.M = std::stoi(text.substr(3));
      } catch (const std::exception&) {
        fail(ErrorCode::kInvalidArgument, "bad stabilization " + text);
      }
    }
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown stabilization " + text);
  }
  return s;
}

std::string stab_name(const StabConfig& s) {
  switch (s.kind) {
    case StabKind::kDofi: return "dofi";
    case StabKind::kDrecipe: return "drecipe";
    case StabKind::kRb: return "rb:" + std::to_string(s.M);
  }
  return "?";
}

VemSolution assemble_and_solve(const PolyMesh& mesh, const DiffusionProblem& prob, const StabConfig& stab) {
  const int nc = mesh.num_cells();
  const int nv = mesh.num_vertices();
  std::vector<Mat> local(static_cast<std::size_t>(nc));
  std::vector<Vec> rhs(static_cast<std::size_t>(nc));
  std::vector<char> downgraded(static_cast<std::size_t>(nc), 0);
  parallel_for(nc, [&](int c) {
    try {
      const Polygon cell = mesh.cell_polygon(c);
      const LocalProjector pr = local_projector(cell);
      Mat a = local_consistency(pr, prob.K);
      switch (stab.kind) {
        case StabKind::kDofi:
          a += stab_dofi_dofi(pr);
          break;
        case StabKind::kDrecipe:
          a += stab_drecipe(pr, prob.K);
          break;
        case StabKind::kRb: {
          const RBDatabase* db = stab.dbs ? stab.dbs->get(cell.size()) : nullptr;
          if (cell.size() == 3) {
            a += stab_rb(cell, pr, prob.K, RBDatabase{}, stab.M);
          } else if (db) {
            a += stab_rb(cell, pr, prob.K, *db, std::min(stab.M, db->m_max));
          } else if (stab.fallback == FallbackPolicy::kDofi) {
            a += stab_dofi_dofi(pr);
            downgraded[static_cast<std::size_t>(c)] = 1;
          } else {
            fail(ErrorCode::kNoDatabaseForN, "no database for N=" + std::to_string(cell.size()));
          }
          break;
        }
      }
      local[static_cast<std::size_t>(c)] = std::move(a);
      rhs[static_cast<std::size_t>(c)] = local_rhs(cell, pr, prob.f);
    } catch (const Error& e) {
      fail(e.code(), "cell " + std::to_string(c) + ": " + e.what());
    }
  });

  VemSolution sol;
  sol.symmetric = (prob.K - prob.K.transpose()).norm() <= 1e-14 * prob.K.norm();
  for (char d : downgraded) sol.downgraded_cells += d;
  if (sol.downgraded_cells > 0) {
    std::cerr << "warning: " << sol.downgraded_cells << " cells downgraded to dofi-dofi (no database)\n";
  }
  std::vector<int> pos(static_cast<std::size_t>(nv), -1);
  std::vector<int> bpos(static_cast<std::size_t>(nv), -1);
  std::vector<int> bnodes;
  for (int v = 0; v < nv; ++v) {
    if (mesh.boundary[static_cast<std::size_t>(v)]) {
      bpos[static_cast<std::size_t>(v)] = static_cast<int>(bnodes.size());
      bnodes.push_back(v);
    } else {
      pos[static_cast<std::size_t>(v)] = static_cast<int>(sol.interior.size());
      sol.interior.push_back(v);
    }
  }
  const auto ni = static_cast<Eigen::Index>(sol.interior.size());
  const auto nb = static_cast<Eigen::Index>(bnodes.size());
  Vec gb(nb);
  for (Eigen::Index k = 0; k < nb; ++k) gb[k] = prob.g(mesh.vertices[static_cast<std::size_t>(bnodes[static_cast<std::size_t>(k)])]);
  std::vector<Eigen::Triplet<double>> tii, tib;
  Vec b = Vec::Zero(ni);
  for (int c = 0; c < nc; ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    const Mat& a = local[static_cast<std::size_t>(c)];
    for (std::size_t r = 0; r < cell.size(); ++r) {
      const int ir = pos[static_cast<std::size_t>(cell[r])];
      if (ir < 0) continue;
      b[ir] += rhs[static_cast<std::size_t>(c)][static_cast<Eigen::Index>(r)];
      for (std::size_t q = 0; q < cell.size(); ++q) {
        const int iq = pos[static_cast<std::size_t>(cell[q])];
        const double v = a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q));
        if (iq >= 0) {
          tii.emplace_back(ir, iq, v);
        } else {
          tib.emplace_back(ir, bpos[static_cast<std::size_t>(cell[q])], v);
        }
      }
    }
  }
  sol.interior_matrix.resize(ni, ni);
  sol.interior_matrix.setFromTriplets(tii.begin(), tii.end());
  SpMat aib(ni, nb);
  aib.setFromTriplets(tib.begin(), tib.end());
  b -= aib * gb;

  sol.dofs = Vec::Zero(nv);
  for (Eigen::Index k = 0; k < nb; ++k) sol.dofs[bnodes[static_cast<std::size_t>(k)]] = gb[k];
  if (ni == 0) return sol;
  Vec x;
  if (sol.symmetric) {
    Eigen::SimplicialLDLT<SpMat> ldlt(sol.interior_matrix);
    if (ldlt.info() != Eigen::Success) fail(ErrorCode::kSolverFailure, "global LDLT factorization failed");
    x = ldlt.solve(b);
  } else {
    Eigen::SparseLU<SpMat> lu(sol.interior_matrix);
    if (lu.info() != Eigen::Success) fail(ErrorCode::kSolverFailure, "global LU factorization failed");
    x = lu.solve(b);
  }
  const double bn = b.norm();
  sol.residual = (sol.interior_matrix * x - b).norm() / (bn > 0 ? bn : 1.0);
  if (!x.allFinite() || sol.residual > 1e-10) {
    fail(ErrorCode::kSolverFailure, "global solve residual " + std::to_string(sol.residual));
  }
  for (Eigen::Index k = 0; k < ni; ++k) sol.dofs[sol.interior[static_cast<std::size_t>(k)]] = x[k];
  return sol;
}

namespace {

Vec start_vector(Eigen::Index n) {
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(1.0 + 7.0 * static_cast<double>(i));
  return x.normalized();
}

template <class Apply>
double power_iteration(Eigen::Index n, Apply apply, double tol, int max_iter) {
  Vec x = start_vector(n);
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec y = apply(x);
    const double next = x.dot(y);
    const double yn = y.norm();
    if (!(yn > 0.0)) return 0.0;
    x = y / yn;
    if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace

ConditionEstimate condition_estimate(const SpMat& a, bool symmetric, double tol, int max_iter) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) fail(ErrorCode::kInvalidArgument, "condition estimate needs a nonempty square matrix");
  ConditionEstimate ce;
  if (symmetric) {
    ce.largest = power_iteration(n, [&](const Vec& x) { return Vec(a * x); }, tol, max_iter);
    Eigen::SimplicialLDLT<SpMat> ldlt(a);
    if (ldlt.info() != Eigen::Success) fail(ErrorCode::kSolverFailure, "factorization failed in condition estimate");
    const double mu = power_iteration(n, [&](const Vec& x) { return Vec(ldlt.solve(x)); }, tol, max_iter);
    ce.smallest = 1.0 / mu;
  } else {
    const double s2 = power_iteration(n, [&](const Vec& x) { return Vec(a.transpose() * (a * x)); }, tol, max_iter);
    ce.largest = std::sqrt(s2);
    Eigen::SparseLU<SpMat> lu(a);
    if (lu.info() != Eigen::Success) fail(ErrorCode::kSolverFailure, "factorization failed in condition estimate");
    const double mu = power_iteration(
        n, [&](const Vec& x) { return Vec(lu.solve(Vec(lu.transpose().solve(x)))); }, tol, max_iter);
    ce.smallest = 1.0 / std::sqrt(mu);
  }
  ce.kappa = ce.largest / ce.smallest;
  return ce;
}

}  // namespace vemrb
