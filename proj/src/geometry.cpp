#include "vemrb/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/LU>

#include "vemrb/error.hpp"

namespace vemrb {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double max_pairwise_distance(std::span<const Point> v) {
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      d = std::max(d, (v[i] - v[j]).norm());
    }
  }
  return d;
}

}  // namespace

Polygon::Polygon(std::vector<Point> vertices, Point star_center)
    : vertices_(std::move(vertices)), star_center_(std::move(star_center)) {
  const int n = size();
  if (n < 3) fail(ErrorCode::kInvalidArgument, "polygon needs at least 3 vertices");
  const double diam = max_pairwise_distance(vertices_);
  if (!(diam > 1e-300) || !std::isfinite(diam)) {
    fail(ErrorCode::kInvalidArgument, "degenerate polygon (zero diameter)");
  }
  if (signed_area(vertices_) <= 0.0) {
    fail(ErrorCode::kInvalidArgument, "polygon vertices must be counterclockwise");
  }
  for (int i = 0; i < n; ++i) {
    if ((vertex(i + 1) - vertex(i)).norm() <= kDegeneracyTol * diam) {
      fail(ErrorCode::kInvalidArgument,
           "consecutive vertices " + std::to_string(i) + " coincide");
    }
  }
  for (int i = 0; i < n; ++i) {
    const double a = cross(vertex(i) - star_center_, vertex(i + 1) - star_center_);
    if (a <= kDegeneracyTol * diam * diam) {
      fail(ErrorCode::kInvalidArgument,
           "star center is not in the kernel (fan triangle " + std::to_string(i) + ")");
    }
  }
}

Polygon Polygon::from_vertices(std::vector<Point> vertices) {
  if (vertices.size() < 3) fail(ErrorCode::kInvalidArgument, "polygon needs at least 3 vertices");
  Point c = area_centroid(vertices);
  return Polygon(std::move(vertices), c);
}

double signed_area(std::span<const Point> v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

Point area_centroid(std::span<const Point> v) {
  // Shift by the first vertex for round-off robustness on small cells.
  const Point o = v[0];
  double a = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point p = v[i] - o;
    const Point q = v[(i + 1) % v.size()] - o;
    const double w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  if (a == 0.0) fail(ErrorCode::kInvalidArgument, "zero-area polygon has no centroid");
  return o + c / (3.0 * a);
}

double polygon_area(const Polygon& p) { return signed_area(p.vertices()); }

double polygon_diameter(const Polygon& p) { return max_pairwise_distance(p.vertices()); }

double polygon_perimeter(const Polygon& p) {
  double s = 0.0;
  for (int i = 0; i < p.size(); ++i) s += edge_length(p, i);
  return s;
}

double edge_length(const Polygon& p, int i) { return (p.vertex(i + 1) - p.vertex(i)).norm(); }

bool is_strictly_convex(const Polygon& p, double tol) {
  for (int i = 0; i < p.size(); ++i) {
    const Point e0 = p.vertex(i + 1) - p.vertex(i);
    const Point e1 = p.vertex(i + 2) - p.vertex(i + 1);
    if (cross(e0, e1) <= tol) return false;
  }
  return true;
}

bool contains(const Polygon& p, const Point& x, double tol) {
  // Winding test plus explicit distance-to-edge check for the tolerance band.
  for (int i = 0; i < p.size(); ++i) {
    const Point a = p.vertex(i);
    const Point b = p.vertex(i + 1);
    const Point ab = b - a;
    const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    if ((a + t * ab - x).norm() <= tol) return true;
  }
  bool inside = false;
  for (int i = 0, j = p.size() - 1; i < p.size(); j = i++) {
    const Point& a = p.vertex(i);
    const Point& b = p.vertex(j);
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xs = (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (x.x() < xs) inside = !inside;
    }
  }
  return inside;
}

Polygon reference_polygon(int n) {
  if (n < 3) fail(ErrorCode::kInvalidArgument, "reference polygon needs n >= 3");
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    v.emplace_back(0.5 * std::cos(t), 0.5 * std::sin(t));
  }
  return Polygon(std::move(v), Point::Zero());
}

NormalizedPolygon normalize(const Polygon& p) {
  const double diam = polygon_diameter(p);
  if (diam < kDegeneracyTol) fail(ErrorCode::kInvalidArgument, "degenerate polygon (diameter < 1e-12)");
  Similarity sim;
  sim.center = area_centroid(p.vertices());
  sim.scale = 1.0 / diam;
  std::vector<Point> v;
  v.reserve(p.vertices().size());
  for (const Point& x : p.vertices()) v.push_back(sim.to_normalized(x));
  return {Polygon(std::move(v), Point::Zero()), sim};
}

namespace {

// Valtr: split sorted coordinates into two chains, turn them into edge
// vectors, pair x/y components randomly and lay the vectors out by angle.
std::vector<Point> valtr_draw(int n, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  auto components = [&](std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double lo = xs.front();
    const double hi = xs.back();
    double last_top = lo;
    double last_bot = lo;
    std::vector<double> out;
    out.reserve(xs.size());
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
      if (coin(rng)) {
        out.push_back(xs[i] - last_top);
        last_top = xs[i];
      } else {
        out.push_back(last_bot - xs[i]);
        last_bot = xs[i];
      }
    }
    out.push_back(hi - last_top);
    out.push_back(last_bot - hi);
    return out;
  };
  std::vector<double> xs(static_cast<std::size_t>(n));
  std::vector<double> ys(static_cast<std::size_t>(n));
  for (auto& x : xs) x = unif(rng);
  for (auto& y : ys) y = unif(rng);
  std::vector<double> vx = components(std::move(xs));
  std::vector<double> vy = components(std::move(ys));
  std::shuffle(vy.begin(), vy.end(), rng);

  std::vector<Point> vec(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < vec.size(); ++k) vec[k] = Point(vx[k], vy[k]);
  std::vector<double> angle(vec.size());
  for (std::size_t k = 0; k < vec.size(); ++k) angle[k] = std::atan2(vec[k].y(), vec[k].x());
  std::vector<std::size_t> order(vec.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return angle[a] < angle[b]; });

  std::vector<Point> pts;
  pts.reserve(vec.size());
  Point cur = Point::Zero();
  for (std::size_t k = 0; k < order.size(); ++k) {
    pts.push_back(cur);
    cur += vec[order[k]];
  }
  return pts;
}

bool acceptable(const std::vector<Point>& pts) {
  const double diam = max_pairwise_distance(pts);
  if (!(diam > 0.0)) return false;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point e0 = (pts[(i + 1) % n] - pts[i]) / diam;
    const Point e1 = (pts[(i + 2) % n] - pts[(i + 1) % n]) / diam;
    if (e0.norm() <= kDegeneracyTol) return false;
    if (cross(e0, e1) <= 1e-10) return false;
  }
  return signed_area(pts) > 0.0;
}

}  // namespace

Polygon generate_convex_polygon(int n, Rng& rng, int retry_budget) {
  if (n < 3) fail(ErrorCode::kInvalidArgument, "convex polygon needs n >= 3");
  for (int attempt = 0; attempt < retry_budget; ++attempt) {
    std::vector<Point> pts = valtr_draw(n, rng);
    if (!acceptable(pts)) continue;
    NormalizedPolygon np = normalize(Polygon::from_vertices(std::move(pts)));
    if (!is_strictly_convex(np.polygon, 1e-10)) continue;
    return np.polygon;
  }
  fail(ErrorCode::kGenerationFailure,
       "convex polygon generator exceeded retry budget of " + std::to_string(retry_budget));
}

AffineMap::AffineMap(Point center, std::vector<Point> physical, std::vector<Point> reference,
                     std::vector<Mat2> matrices, std::vector<double> det_inv_abs)
    : center_(std::move(center)),
      physical_(std::move(physical)),
      reference_(std::move(reference)),
      matrices_(std::move(matrices)),
      det_inv_abs_(std::move(det_inv_abs)) {
  inverses_.reserve(matrices_.size());
  for (const Mat2& b : matrices_) inverses_.push_back(b.inverse());
}

namespace {

int locate_fan(const std::vector<Point>& v, const Point& apex, const Point& x, double tol) {
  const int n = static_cast<int>(v.size());
  int best = -1;
  double best_score = -1e300;
  for (int i = 0; i < n; ++i) {
    Mat2 e;
    e.col(0) = v[static_cast<std::size_t>(i)] - apex;
    e.col(1) = v[static_cast<std::size_t>((i + 1) % n)] - apex;
    const Eigen::Vector2d ab = e.inverse() * (x - apex);
    const double score = std::min({ab.x(), ab.y(), 1.0 - ab.x() - ab.y()});
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best_score >= -tol ? best : -1;
}

}  // namespace

int AffineMap::physical_triangle_of(const Point& x, double tol) const {
  return locate_fan(physical_, center_, x, tol);
}

int AffineMap::reference_triangle_of(const Point& y, double tol) const {
  return locate_fan(reference_, Point::Zero(), y, tol);
}

Point AffineMap::to_reference(const Point& x, int triangle) const {
  return matrices_[static_cast<std::size_t>(triangle)] * (x - center_);
}

Point AffineMap::to_physical(const Point& y, int triangle) const {
  return center_ + inverses_[static_cast<std::size_t>(triangle)] * y;
}

Point AffineMap::to_reference(const Point& x) const {
  const int t = physical_triangle_of(x);
  if (t < 0) fail(ErrorCode::kOutOfDomain, "point outside the physical polygon");
  return to_reference(x, t);
}

Point AffineMap::to_physical(const Point& y) const {
  const int t = reference_triangle_of(y);
  if (t < 0) fail(ErrorCode::kOutOfDomain, "point outside the reference polygon");
  return to_physical(y, t);
}

AffineMap build_affine_map(const Polygon& p) {
  const int n = p.size();
  const Polygon ref = reference_polygon(n);
  const double diam = polygon_diameter(p);
  std::vector<Mat2> mats;
  std::vector<double> dets;
  for (int i = 0; i < n; ++i) {
    Mat2 phys;
    phys.col(0) = p.vertex(i) - p.star_center();
    phys.col(1) = p.vertex(i + 1) - p.star_center();
    Mat2 refm;
    refm.col(0) = ref.vertex(i);
    refm.col(1) = ref.vertex(i + 1);
    const double det_phys = phys.determinant();
    if (std::abs(det_phys) < kDegeneracyTol * diam * diam) {
      fail(ErrorCode::kDegenerateTriangle, "fan triangle " + std::to_string(i) + " is degenerate");
    }
    mats.push_back(refm * phys.inverse());
    dets.push_back(std::abs(det_phys) / std::abs(refm.determinant()));
  }
  return AffineMap(p.star_center(), p.vertices(), ref.vertices(), std::move(mats), std::move(dets));
}

Mat2 basis_matrix(int nu) {
  Mat2 a = Mat2::Zero();
  switch (nu) {
    case 1: a(0, 0) = 1.0; break;
    case 2: a(1, 1) = 1.0; break;
    case 3: a(0, 1) = 1.0; a(1, 0) = 1.0; break;
    case 4: a(0, 1) = 1.0; a(1, 0) = -1.0; break;
    default: fail(ErrorCode::kInvalidArgument, "basis matrix index must be 1..4");
  }
  return a;
}

Mat2 pullback_tensor(const Mat2& B, double det_inv_abs, const Mat2& K) {
  if (std::abs(B.determinant()) <= 1e-14) {
    fail(ErrorCode::kDegenerateTriangle, "singular affine matrix");
  }
  // grad_x u = B^T grad_y u and dx = |det B^{-1}| dy for y = B x.
  return det_inv_abs * (B * K * B.transpose());
}

std::array<double, 3> sym_coeffs(const Mat2& B, double det_inv_abs) {
  const Mat2 m = pullback_tensor(B, det_inv_abs, Mat2::Identity());
  return {m(0, 0), m(1, 1), 0.5 * (m(0, 1) + m(1, 0))};
}

std::array<double, 4> full_coeffs(const Mat2& B, double det_inv_abs, const Mat2& K) {
  const Mat2 m = pullback_tensor(B, det_inv_abs, K);
  return {m(0, 0), m(1, 1), 0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(0, 1) - m(1, 0))};
}

void write_polygon_line(std::ostream& os, const Polygon& p) {
  os << p.size() << std::setprecision(17);
  for (const Point& v : p.vertices()) os << ' ' << v.x() << ' ' << v.y();
  os << '\n';
}

Polygon parse_polygon_line(const std::string& line, int line_number) {
  std::istringstream ss(line);
  int n = 0;
  if (!(ss >> n) || n < 3) {
    fail(ErrorCode::kParseError, "line " + std::to_string(line_number) + ": bad vertex count");
  }
  std::vector<Point> v(static_cast<std::size_t>(n));
  for (auto& x : v) {
    if (!(ss >> x.x() >> x.y())) {
      fail(ErrorCode::kParseError, "line " + std::to_string(line_number) + ": missing coordinates");
    }
  }
  try {
    return Polygon::from_vertices(std::move(v));
  } catch (const Error& e) {
    fail(ErrorCode::kParseError, "line " + std::to_string(line_number) + ": " + e.what());
  }
}

void write_polyset(std::ostream& os, const PolygonSet& set) {
  os << "POLYSET v1 N=" << set.n << " count=" << set.polygons.size() << " seed=" << set.seed << '\n';
  for (const Polygon& p : set.polygons) write_polygon_line(os, p);
}

PolygonSet read_polyset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::kParseError, "line 1: empty polygon set");
  PolygonSet set;
  std::size_t count = 0;
  unsigned long long seed = 0;
  if (std::sscanf(line.c_str(), "POLYSET v1 N=%d count=%zu seed=%llu", &set.n, &count, &seed) != 3) {
    fail(ErrorCode::kParseError, "line 1: expected `POLYSET v1 N=<n> count=<c> seed=<s>`");
  }
  set.seed = seed;
  int line_number = 1;
  while (std::getline(is, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Polygon p = parse_polygon_line(line, line_number);
    if (p.size() != set.n) {
      fail(ErrorCode::kParseError, "line " + std::to_string(line_number) + ": vertex count mismatch");
    }
    set.polygons.push_back(std::move(p));
  }
  if (set.polygons.size() != count) {
    fail(ErrorCode::kParseError, "polygon count does not match header");
  }
  return set;
}

}  // namespace vemrb
