#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace vemrb {

using Point = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Rng = std::mt19937_64;

/// Relative degeneracy tolerance used throughout (scaled by the diameter).
inline constexpr double kDegeneracyTol = 1e-12;

/// A simple counterclockwise polygon together with a point of its kernel.
///
/// The star center is the apex of the fan triangulation T_i = (v_i, v_{i+1},
/// x_K) that carries the piecewise affine map onto the reference polygon.
/// For convex polygons it is the area centroid.
class Polygon {
 public:
  Polygon() = default;

  /// Validates: n >= 3, positive signed area, no coincident consecutive
  /// vertices, every fan triangle positively oriented.
  Polygon(std::vector<Point> vertices, Point star_center);

  /// Uses the area centroid as star center.
  static Polygon from_vertices(std::vector<Point> vertices);

  int size() const { return static_cast<int>(vertices_.size()); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int i) const { return vertices_[static_cast<std::size_t>(wrap(i))]; }
  const Point& star_center() const { return star_center_; }

  int wrap(int i) const {
    const int n = size();
    return ((i % n) + n) % n;
  }

 private:
  std::vector<Point> vertices_;
  Point star_center_ = Point::Zero();
};

double signed_area(std::span<const Point> vertices);
Point area_centroid(std::span<const Point> vertices);
double polygon_area(const Polygon& p);
double polygon_diameter(const Polygon& p);
double polygon_perimeter(const Polygon& p);
/// Length of edge (v_i, v_{i+1}).
double edge_length(const Polygon& p, int i);
/// Strict convexity: every cross product of consecutive edges exceeds `tol`.
bool is_strictly_convex(const Polygon& p, double tol = 0.0);
/// Point-in-polygon with a boundary tolerance (absolute).
bool contains(const Polygon& p, const Point& x, double tol = 0.0);

/// Translation + uniform scaling taking a polygon into the parameter space
/// (star center at origin, unit diameter).
struct Similarity {
  Point center = Point::Zero();
  double scale = 1.0;  // normalized = (physical - center) * scale

  Point to_normalized(const Point& x) const { return (x - center) * scale; }
  Point to_physical(const Point& y) const { return center + y / scale; }
};

struct NormalizedPolygon {
  Polygon polygon;
  Similarity similarity;
};

/// Regular n-gon with unit diameter centered at the origin, vertex i at
/// angle 2*pi*i/n.
Polygon reference_polygon(int n);

/// Translate the star center (area centroid) to the origin and scale to unit
/// diameter (max pairwise vertex distance).
NormalizedPolygon normalize(const Polygon& p);

/// Random convex n-gon via Valtr's algorithm, normalized. Draws that produce
/// (near-)collinear consecutive vertices are rejected and redrawn.
Polygon generate_convex_polygon(int n, Rng& rng, int retry_budget = 1000);

/// Continuous piecewise linear map from a normalized polygon K onto the
/// reference polygon: x -> B_i (x - x_K) on fan triangle T_i.
class AffineMap {
 public:
  AffineMap() = default;
  AffineMap(Point center, std::vector<Point> physical, std::vector<Point> reference,
            std::vector<Mat2> matrices, std::vector<double> det_inv_abs);

  int size() const { return static_cast<int>(matrices_.size()); }
  const Mat2& matrix(int i) const { return matrices_[static_cast<std::size_t>(i)]; }
  /// |det B_i^{-1}| = |T_i| / |T^_i|.
  double det_inv_abs(int i) const { return det_inv_abs_[static_cast<std::size_t>(i)]; }
  const Point& center() const { return center_; }

  /// Fan triangle of the physical polygon containing x (tolerant), or -1.
  int physical_triangle_of(const Point& x, double tol = 1e-10) const;
  /// Fan triangle of the reference polygon containing y (tolerant), or -1.
  int reference_triangle_of(const Point& y, double tol = 1e-10) const;

  Point to_reference(const Point& x, int triangle) const;
  Point to_physical(const Point& y, int triangle) const;
  /// Locates the fan triangle first; throws out-of-domain when outside.
  Point to_reference(const Point& x) const;
  Point to_physical(const Point& y) const;

 private:
  Point center_ = Point::Zero();
  std::vector<Point> physical_;
  std::vector<Point> reference_;
  std::vector<Mat2> matrices_;
  std::vector<Mat2> inverses_;
  std::vector<double> det_inv_abs_;
};

/// B_i maps the physical fan triangle T_i onto the reference fan triangle.
AffineMap build_affine_map(const Polygon& p);

/// Basis of 2x2 matrices: A1=[1 0;0 0], A2=[0 0;0 1], A3=[0 1;1 0],
/// A4=[0 1;-1 0] (nu = 1..4).
Mat2 basis_matrix(int nu);

/// Coefficients of the pulled-back Laplacian tensor |det B^{-1}| B B^T in the
/// symmetric basis {A1, A2, A3}.
std::array<double, 3> sym_coeffs(const Mat2& B, double det_inv_abs);

/// Coefficients of |det B^{-1}| B K B^T in {A1, A2, A3, A4}; exact for any
/// (nonsymmetric) K.
std::array<double, 4> full_coeffs(const Mat2& B, double det_inv_abs, const Mat2& K);

/// The matrix whose coefficients full_coeffs returns.
Mat2 pullback_tensor(const Mat2& B, double det_inv_abs, const Mat2& K);

// Polygon dataset text format: header `POLYSET v1 N=<n> count=<c> seed=<s>`,
// then one polygon per line as `N x1 y1 ... xN yN`.
struct PolygonSet {
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<Polygon> polygons;
};

void write_polygon_line(std::ostream& os, const Polygon& p);
Polygon parse_polygon_line(const std::string& line, int line_number);
void write_polyset(std::ostream& os, const PolygonSet& set);
PolygonSet read_polyset(std::istream& is);

}  // namespace vemrb
