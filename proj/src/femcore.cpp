#include "vemrb/femcore.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "vemrb/error.hpp"

namespace vemrb {

std::size_t trimesh_node_count(int n_vertices, int level) {
  const std::size_t n = std::size_t{1} << level;
  const std::size_t nv = static_cast<std::size_t>(n_vertices);
  return 1 + nv * n + nv * n * (n - 1) / 2;
}

int TriMesh::lattice_node(int fan, int a, int b) const {
  const int n = subdivisions();
  const int nv = polygon.size();
  if (a == 0 && b == 0) return 0;
  if (b == 0) return 1 + fan * n + a - 1;
  if (a == 0) return 1 + ((fan + 1) % nv) * n + b - 1;
  const int per_fan = n * (n - 1) / 2;
  return 1 + nv * n + fan * per_fan + (b - 1) * n - (b - 1) * b / 2 + (a - 1);
}

TriMesh triangulate_level(const Polygon& p, int level, std::size_t node_cap) {
  if (level < 0 || level > 14) fail(ErrorCode::kInvalidArgument, "refinement level out of range");
  const int nv = p.size();
  if (trimesh_node_count(nv, level) > node_cap) {
    fail(ErrorCode::kResourceLimit, "triangulation would exceed the node cap of " + std::to_string(node_cap));
  }
  TriMesh m;
  m.polygon = p;
  m.level = level;
  const int n = 1 << level;
  const std::size_t count = trimesh_node_count(nv, level);
  m.nodes.resize(count);
  m.boundary.assign(count, false);
  m.boundary_edge.assign(count, -1);
  m.boundary_param.assign(count, 0.0);
  m.vertex_nodes.resize(static_cast<std::size_t>(nv));
  const Point c = p.star_center();
  m.nodes[0] = c;
  for (int k = 0; k < nv; ++k) {
    const Point d = p.vertex(k) - c;
    for (int t = 1; t < n; ++t) m.nodes[static_cast<std::size_t>(1 + k * n + t - 1)] = c + (double(t) / n) * d;
    const int vn = 1 + k * n + n - 1;
    m.nodes[static_cast<std::size_t>(vn)] = p.vertex(k);
    m.boundary[static_cast<std::size_t>(vn)] = true;
    m.boundary_edge[static_cast<std::size_t>(vn)] = k;
    m.vertex_nodes[static_cast<std::size_t>(k)] = vn;
  }
  for (int i = 0; i < nv; ++i) {
    const Point di = p.vertex(i) - c;
    const Point dj = p.vertex(i + 1) - c;
    const Point e = p.vertex(i + 1) - p.vertex(i);
    for (int b = 1; b < n; ++b) {
      for (int a = 1; a + b <= n; ++a) {
        const auto id = static_cast<std::size_t>(m.lattice_node(i, a, b));
        if (a + b == n) {
          m.nodes[id] = p.vertex(i) + (double(b) / n) * e;
          m.boundary[id] = true;
          m.boundary_edge[id] = i;
          m.boundary_param[id] = double(b) / n;
        } else {
          m.nodes[id] = c + (double(a) / n) * di + (double(b) / n) * dj;
        }
      }
    }
  }
  m.triangles.reserve(static_cast<std::size_t>(nv) * n * n);
  m.fan_of_triangle.reserve(static_cast<std::size_t>(nv) * n * n);
  for (int i = 0; i < nv; ++i) {
    for (int b = 0; b < n; ++b) {
      for (int a = 0; a + b < n; ++a) {
        m.triangles.push_back({m.lattice_node(i, a, b), m.lattice_node(i, a + 1, b), m.lattice_node(i, a, b + 1)});
        m.fan_of_triangle.push_back(i);
        if (a + b < n - 1) {
          m.triangles.push_back(
              {m.lattice_node(i, a + 1, b), m.lattice_node(i, a + 1, b + 1), m.lattice_node(i, a, b + 1)});
          m.fan_of_triangle.push_back(i);
        }
      }
    }
  }
  return m;
}

namespace {

double fan_max_edge(const Polygon& p) {
  double e = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    e = std::max(e, (p.vertex(i) - p.star_center()).norm());
    e = std::max(e, edge_length(p, i));
  }
  return e;
}

}  // namespace

int level_for_delta(const Polygon& p, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::kInvalidArgument, "delta must be positive");
  const double e = fan_max_edge(p);
  int level = 0;
  while (e / double(1 << level) > delta) {
    ++level;
    if (level > 14) fail(ErrorCode::kResourceLimit, "delta too small for the triangulation");
  }
  return level;
}

TriMesh triangulate(const Polygon& p, double delta, std::size_t node_cap) {
  return triangulate_level(p, level_for_delta(p, delta), node_cap);
}

double max_edge_length(const TriMesh& m) {
  double e = 0.0;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      e = std::max(e, (m.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])] -
                       m.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])])
                          .norm());
    }
  }
  return e;
}

void write_trimesh(std::ostream& os, const TriMesh& m) {
  os << "POLYMESH v1\n" << m.num_nodes() << ' ' << m.num_triangles() << '\n' << std::setprecision(17);
  for (const Point& x : m.nodes) os << x.x() << ' ' << x.y() << '\n';
  for (const auto& t : m.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

std::array<Point, 3> p1_gradients(const Point& p0, const Point& p1, const Point& p2) {
  const double twice = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  auto rot = [&](const Point& a, const Point& b) -> Point { return Point(a.y() - b.y(), b.x() - a.x()) / twice; };
  return {rot(p1, p2), rot(p2, p0), rot(p0, p1)};
}

Eigen::Matrix3d local_stiffness(const Point& p0, const Point& p1, const Point& p2, const Mat2& K) {
  const double area = 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
  const double diam = std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
  if (!(std::abs(area) > 0.5 * kDegeneracyTol * diam * diam)) fail(ErrorCode::kAssemblyError, "degenerate triangle");
  const auto g = p1_gradients(p0, p1, p2);
  Eigen::Matrix3d A;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) A(r, c) = area * g[static_cast<std::size_t>(r)].dot(K * g[static_cast<std::size_t>(c)]);
  }
  return A;
}

namespace {

template <class TensorOf>
SpMat assemble_impl(const TriMesh& m, TensorOf tensor) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.triangles.size() * 9);
  const double scale = polygon_diameter(m.polygon);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[static_cast<std::size_t>(t)];
    const Point& p0 = m.nodes[static_cast<std::size_t>(tri[0])];
    const Point& p1 = m.nodes[static_cast<std::size_t>(tri[1])];
    const Point& p2 = m.nodes[static_cast<std::size_t>(tri[2])];
    const double twice = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    if (!(twice > 1e-24 * scale * scale)) {
      fail(ErrorCode::kAssemblyError, "degenerate triangle " + std::to_string(t));
    }
    const Eigen::Matrix3d A = local_stiffness(p0, p1, p2, tensor(t));
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) trip.emplace_back(tri[static_cast<std::size_t>(r)], tri[static_cast<std::size_t>(c)], A(r, c));
    }
  }
  SpMat S(m.num_nodes(), m.num_nodes());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

}  // namespace

SpMat assemble_stiffness(const TriMesh& m, const Mat2& K) {
  return assemble_impl(m, [&](int) -> const Mat2& { return K; });
}

SpMat assemble_stiffness(const TriMesh& m, std::span<const Mat2> K) {
  if (K.size() != m.triangles.size()) fail(ErrorCode::kInvalidArgument, "one tensor per triangle expected");
  return assemble_impl(m, [&](int t) -> const Mat2& { return K[static_cast<std::size_t>(t)]; });
}

Vec assemble_load(const TriMesh& m, const std::function<double(const Point&)>& f) {
  Vec b = Vec::Zero(m.num_nodes());
  for (const auto& tri : m.triangles) {
    const Point& p0 = m.nodes[static_cast<std::size_t>(tri[0])];
    const Point& p1 = m.nodes[static_cast<std::size_t>(tri[1])];
    const Point& p2 = m.nodes[static_cast<std::size_t>(tri[2])];
    const double area = 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
    const double f01 = f(0.5 * (p0 + p1));
    const double f12 = f(0.5 * (p1 + p2));
    const double f20 = f(0.5 * (p2 + p0));
    // hat k is 1/2 at the two midpoints on its edges, 0 at the third
    b[tri[0]] += area / 3.0 * 0.5 * (f01 + f20);
    b[tri[1]] += area / 3.0 * 0.5 * (f01 + f12);
    b[tri[2]] += area / 3.0 * 0.5 * (f12 + f20);
  }
  return b;
}

struct DirichletSolver::Impl {
  enum class Kind { kLdlt, kLu, kCg, kBicg } kind = Kind::kLdlt;
  SpMat a_ii;
  SpMat a_ib;
  std::vector<int> boundary;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  Eigen::SparseLU<SpMat> lu;
};

DirichletSolver::DirichletSolver(const TriMesh& m, const Mat2& K, std::size_t cg_threshold)
    : DirichletSolver(m, assemble_stiffness(m, K), (K - K.transpose()).norm() <= 1e-14 * K.norm(), cg_threshold) {}

DirichletSolver::DirichletSolver(const TriMesh& m, SpMat stiffness, bool symmetric, std::size_t cg_threshold)
    : impl_(std::make_unique<Impl>()), stiffness_(std::move(stiffness)) {
  position_.assign(static_cast<std::size_t>(m.num_nodes()), -1);
  std::vector<int> bpos(static_cast<std::size_t>(m.num_nodes()), -1);
  for (int v = 0; v < m.num_nodes(); ++v) {
    if (m.boundary[static_cast<std::size_t>(v)]) {
      bpos[static_cast<std::size_t>(v)] = static_cast<int>(impl_->boundary.size());
      impl_->boundary.push_back(v);
    } else {
      position_[static_cast<std::size_t>(v)] = static_cast<int>(interior_.size());
      interior_.push_back(v);
    }
  }
  const int ni = static_cast<int>(interior_.size());
  const int nb = static_cast<int>(impl_->boundary.size());
  std::vector<Eigen::Triplet<double>> ti, tb;
  for (int col = 0; col < stiffness_.outerSize(); ++col) {
    for (SpMat::InnerIterator it(stiffness_, col); it; ++it) {
      const int r = position_[static_cast<std::size_t>(it.row())];
      if (r < 0) continue;
      const int ci = position_[static_cast<std::size_t>(col)];
      if (ci >= 0) {
        ti.emplace_back(r, ci, it.value());
      } else {
        tb.emplace_back(r, bpos[static_cast<std::size_t>(col)], it.value());
      }
    }
  }
  impl_->a_ii.resize(ni, ni);
  impl_->a_ii.setFromTriplets(ti.begin(), ti.end());
  impl_->a_ib.resize(ni, nb);
  impl_->a_ib.setFromTriplets(tb.begin(), tb.end());
  if (ni == 0) return;
  const bool iterative = static_cast<std::size_t>(ni) > cg_threshold;
  if (symmetric && !iterative) {
    impl_->kind = Impl::Kind::kLdlt;
    impl_->ldlt.compute(impl_->a_ii);
    if (impl_->ldlt.info() != Eigen::Success) fail(ErrorCode::kSolverFailure, "sparse LDLT factorization failed");
  } else if (!symmetric && !iterative) {
    impl_->kind = Impl::Kind::kLu;
    impl_->lu.compute(impl_->a_ii);
    if (impl_->lu.info() != Eigen::Success) fail(ErrorCode::kSolverFailure, "sparse LU factorization failed");
  } else {
    impl_->kind = symmetric ? Impl::Kind::kCg : Impl::Kind::kBicg;
  }
}

DirichletSolver::~DirichletSolver() = default;
DirichletSolver::DirichletSolver(DirichletSolver&&) noexcept = default;
DirichletSolver& DirichletSolver::operator=(DirichletSolver&&) noexcept = default;

Vec DirichletSolver::solve(const Vec& values, const Vec& load) const {
  const int nn = static_cast<int>(position_.size());
  if (values.size() != nn) fail(ErrorCode::kInvalidArgument, "boundary value vector has wrong length");
  if (load.size() != 0 && load.size() != nn) fail(ErrorCode::kInvalidArgument, "load vector has wrong length");
  Vec gb(static_cast<Eigen::Index>(impl_->boundary.size()));
  for (std::size_t k = 0; k < impl_->boundary.size(); ++k) gb[static_cast<Eigen::Index>(k)] = values[impl_->boundary[k]];
  Vec out = Vec::Zero(nn);
  for (std::size_t k = 0; k < impl_->boundary.size(); ++k) out[impl_->boundary[k]] = gb[static_cast<Eigen::Index>(k)];
  if (interior_.empty()) return out;
  Vec rhs = -(impl_->a_ib * gb);
  if (load.size() != 0) {
    for (std::size_t k = 0; k < interior_.size(); ++k) rhs[static_cast<Eigen::Index>(k)] += load[interior_[k]];
  }
  Vec x;
  switch (impl_->kind) {
    case Impl::Kind::kLdlt:
      x = impl_->ldlt.solve(rhs);
      break;
    case Impl::Kind::kLu:
      x = impl_->lu.solve(rhs);
      break;
    case Impl::Kind::kCg: {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
      cg.setTolerance(1e-12);
      cg.setMaxIterations(100000);
      cg.compute(impl_->a_ii);
      x = cg.solve(rhs);
      if (cg.info() != Eigen::Success) {
        fail(ErrorCode::kSolverFailure, "conjugate gradients did not converge, residual " + std::to_string(cg.error()));
      }
      break;
    }
    case Impl::Kind::kBicg: {
      Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> bicg;
      bicg.setTolerance(1e-12);
      bicg.setMaxIterations(100000);
      bicg.compute(impl_->a_ii);
      x = bicg.solve(rhs);
      if (bicg.info() != Eigen::Success) {
        fail(ErrorCode::kSolverFailure, "BiCGSTAB did not converge, residual " + std::to_string(bicg.error()));
      }
      break;
    }
  }
  for (std::size_t k = 0; k < interior_.size(); ++k) out[interior_[k]] = x[static_cast<Eigen::Index>(k)];
  return out;
}

Vec solve_dirichlet(const TriMesh& m, const Mat2& K, const Vec& values, const Vec& load) {
  return DirichletSolver(m, K).solve(values, load);
}

Vec hat_boundary_values(const TriMesh& m, int j) {
  const int nv = m.polygon.size();
  if (j < 0 || j >= nv) fail(ErrorCode::kInvalidArgument, "vertex index out of range");
  Vec g = Vec::Zero(m.num_nodes());
  const int prev = (j + nv - 1) % nv;
  for (int v = 0; v < m.num_nodes(); ++v) {
    const int e = m.boundary_edge[static_cast<std::size_t>(v)];
    if (e < 0) continue;
    const double t = m.boundary_param[static_cast<std::size_t>(v)];
    double val = 0.0;
    if (e == j) val += 1.0 - t;
    if (e == prev) val += t;
    g[v] = val;
  }
  return g;
}

Vec trace_from_dofs(const TriMesh& m, const Vec& dofs) {
  const int nv = m.polygon.size();
  if (dofs.size() != nv) fail(ErrorCode::kInvalidArgument, "one dof per polygon vertex expected");
  Vec g = Vec::Zero(m.num_nodes());
  for (int v = 0; v < m.num_nodes(); ++v) {
    const int e = m.boundary_edge[static_cast<std::size_t>(v)];
    if (e < 0) continue;
    const double t = m.boundary_param[static_cast<std::size_t>(v)];
    g[v] = (1.0 - t) * dofs[e] + t * dofs[(e + 1) % nv];
  }
  return g;
}

Vec vem_basis_fe(const TriMesh& m, int j) { return solve_dirichlet(m, Mat2::Identity(), hat_boundary_values(m, j)); }

Vec vem_basis_fe(const Polygon& p, int j, double delta) { return vem_basis_fe(triangulate(p, delta), j); }

namespace {

struct FanFrame {
  std::vector<Mat2> inverse;
};

FanFrame fan_frame(const Polygon& p) {
  FanFrame f;
  f.inverse.reserve(static_cast<std::size_t>(p.size()));
  for (int i = 0; i < p.size(); ++i) {
    Mat2 m;
    m.col(0) = p.vertex(i) - p.star_center();
    m.col(1) = p.vertex(i + 1) - p.star_center();
    f.inverse.push_back(m.inverse());
  }
  return f;
}

double interpolate_in(const TriMesh& m, const FanFrame& frame, const Vec& values, const Point& x) {
  const Polygon& p = m.polygon;
  const Point rel = x - p.star_center();
  int best = -1;
  double best_violation = 0.0;
  Point best_ab;
  for (int i = 0; i < p.size(); ++i) {
    const Point ab = frame.inverse[static_cast<std::size_t>(i)] * rel;
    const double v = std::max({0.0, -ab.x(), -ab.y(), ab.x() + ab.y() - 1.0});
    if (best < 0 || v < best_violation) {
      best = i;
      best_violation = v;
      best_ab = ab;
      if (v == 0.0) break;
    }
  }
  double s = std::max(best_ab.x(), 0.0);
  double t = std::max(best_ab.y(), 0.0);
  if (s + t > 1.0) {
    const double sum = s + t;
    s /= sum;
    t /= sum;
  }
  if (best_violation > 0.0) {
    const Point clamped = p.star_center() + s * (p.vertex(best) - p.star_center()) +
                          t * (p.vertex(best + 1) - p.star_center());
    if ((clamped - x).norm() > 1e-10 * polygon_diameter(p)) {
      fail(ErrorCode::kOutOfDomain, "point outside the polygon");
    }
  }
  const int n = m.subdivisions();
  s *= n;
  t *= n;
  int a0 = std::min(static_cast<int>(std::floor(s)), n - 1);
  int b0 = std::min(static_cast<int>(std::floor(t)), n - 1 - a0);
  const double fa = s - a0;
  const double fb = t - b0;
  auto u = [&](int a, int b) { return values[m.lattice_node(best, a, b)]; };
  if (fa + fb <= 1.0 || a0 + b0 >= n - 1) {
    return u(a0, b0) * (1.0 - fa - fb) + u(a0 + 1, b0) * fa + u(a0, b0 + 1) * fb;
  }
  return u(a0 + 1, b0) * (1.0 - fb) + u(a0, b0 + 1) * (1.0 - fa) + u(a0 + 1, b0 + 1) * (fa + fb - 1.0);
}

}  // namespace

double interpolate(const TriMesh& m, const Vec& values, const Point& x) {
  if (values.size() != m.num_nodes()) fail(ErrorCode::kInvalidArgument, "field length does not match mesh");
  return interpolate_in(m, fan_frame(m.polygon), values, x);
}

Vec interpolate(const TriMesh& m, const Vec& values, std::span<const Point> targets) {
  if (values.size() != m.num_nodes()) fail(ErrorCode::kInvalidArgument, "field length does not match mesh");
  const FanFrame frame = fan_frame(m.polygon);
  Vec out(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t k = 0; k < targets.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = interpolate_in(m, frame, values, targets[k]);
  }
  return out;
}

double Norms::h1() const { return std::sqrt(l2 * l2 + h1_semi * h1_semi); }

Norms field_norms(const TriMesh& m, const Vec& u, const Mat2& K) {
  if (u.size() != m.num_nodes()) fail(ErrorCode::kInvalidArgument, "field length does not match mesh");
  const Mat2 Ks = 0.5 * (K + K.transpose());
  double l2 = 0.0, h1 = 0.0, en = 0.0;
  for (const auto& tri : m.triangles) {
    const Point& p0 = m.nodes[static_cast<std::size_t>(tri[0])];
    const Point& p1 = m.nodes[static_cast<std::size_t>(tri[1])];
    const Point& p2 = m.nodes[static_cast<std::size_t>(tri[2])];
    const double area = 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
    const auto g = p1_gradients(p0, p1, p2);
    const double u0 = u[tri[0]], u1 = u[tri[1]], u2 = u[tri[2]];
    const Point grad = u0 * g[0] + u1 * g[1] + u2 * g[2];
    const double m01 = 0.5 * (u0 + u1), m12 = 0.5 * (u1 + u2), m20 = 0.5 * (u2 + u0);
    l2 += area / 3.0 * (m01 * m01 + m12 * m12 + m20 * m20);
    h1 += area * grad.squaredNorm();
    en += area * grad.dot(Ks * grad);
  }
  Norms r;
  r.l2 = std::sqrt(l2);
  r.h1_semi = std::sqrt(h1);
  r.energy = std::sqrt(std::max(en, 0.0));
  r.linf = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

ErrorIntegrals& ErrorIntegrals::operator+=(const ErrorIntegrals& o) {
  err_l2_sq += o.err_l2_sq;
  err_h1_semi_sq += o.err_h1_semi_sq;
  err_energy_sq += o.err_energy_sq;
  err_max = std::max(err_max, o.err_max);
  ref_l2_sq += o.ref_l2_sq;
  ref_h1_semi_sq += o.ref_h1_semi_sq;
  ref_energy_sq += o.ref_energy_sq;
  ref_max = std::max(ref_max, o.ref_max);
  return *this;
}

namespace {

// Dunavant 6-point rule, exact for degree 4: barycentrics and weight.
constexpr double kA1 = 0.445948490915965, kB1 = 0.108103018168070, kW1 = 0.223381589678011;
constexpr double kA2 = 0.091576213509771, kB2 = 0.816847572980459, kW2 = 0.109951743655322;
constexpr std::array<std::array<double, 4>, 6> kDegree4Rule = {{
    {kB1, kA1, kA1, kW1}, {kA1, kB1, kA1, kW1}, {kA1, kA1, kB1, kW1},
    {kB2, kA2, kA2, kW2}, {kA2, kB2, kA2, kW2}, {kA2, kA2, kB2, kW2},
}};

}  // namespace

ErrorIntegrals error_integrals(const TriMesh& m, const Vec& uh, const ExactFunction& u, const Mat2& K) {
  if (uh.size() != m.num_nodes()) fail(ErrorCode::kInvalidArgument, "field length does not match mesh");
  const Mat2 Ks = 0.5 * (K + K.transpose());
  ErrorIntegrals r;
  for (const auto& tri : m.triangles) {
    const Point& p0 = m.nodes[static_cast<std::size_t>(tri[0])];
    const Point& p1 = m.nodes[static_cast<std::size_t>(tri[1])];
    const Point& p2 = m.nodes[static_cast<std::size_t>(tri[2])];
    const double area = 0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x());
    const auto g = p1_gradients(p0, p1, p2);
    const double u0 = uh[tri[0]], u1 = uh[tri[1]], u2 = uh[tri[2]];
    const Point gh = u0 * g[0] + u1 * g[1] + u2 * g[2];
    for (const auto& q : kDegree4Rule) {
      const Point x = q[0] * p0 + q[1] * p1 + q[2] * p2;
      const double vh = q[0] * u0 + q[1] * u1 + q[2] * u2;
      const double w = area * q[3];
      const double ue = u.value(x);
      const Point ge = u.gradient(x);
      const Point de = ge - gh;
      r.err_l2_sq += w * (ue - vh) * (ue - vh);
      r.err_h1_semi_sq += w * de.squaredNorm();
      r.err_energy_sq += w * de.dot(Ks * de);
      r.ref_l2_sq += w * ue * ue;
      r.ref_h1_semi_sq += w * ge.squaredNorm();
      r.ref_energy_sq += w * ge.dot(Ks * ge);
    }
  }
  for (int v = 0; v < m.num_nodes(); ++v) {
    const double ue = u.value(m.nodes[static_cast<std::size_t>(v)]);
    r.err_max = std::max(r.err_max, std::abs(ue - uh[v]));
    r.ref_max = std::max(r.ref_max, std::abs(ue));
  }
  return r;
}

Norms error_norms(const TriMesh& m, const Vec& uh, const ExactFunction& u, const Mat2& K) {
  const ErrorIntegrals e = error_integrals(m, uh, u, K);
  Norms r;
  r.l2 = std::sqrt(e.err_l2_sq);
  r.h1_semi = std::sqrt(e.err_h1_semi_sq);
  r.energy = std::sqrt(e.err_energy_sq);
  r.linf = e.err_max;
  return r;
}

}  // namespace vemrb
