#include "vemrb/polymesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "vemrb/error.hpp"

namespace vemrb {

Polygon PolyMesh::cell_polygon(int c) const { return Polygon::from_vertices(cell_points(c)); }

std::vector<Point> PolyMesh::cell_points(int c) const {
  std::vector<Point> pts;
  const auto& cell = cells[static_cast<std::size_t>(c)];
  pts.reserve(cell.size());
  for (int v : cell) pts.push_back(vertices[static_cast<std::size_t>(v)]);
  return pts;
}

namespace {

constexpr double kBoundaryTol = 1e-10;

bool on_square_boundary(const Point& x) {
  return std::abs(x.x()) < kBoundaryTol || std::abs(x.x() - 1.0) < kBoundaryTol ||
         std::abs(x.y()) < kBoundaryTol || std::abs(x.y() - 1.0) < kBoundaryTol;
}

double snap(double v) {
  if (std::abs(v) < 1e-12) return 0.0;
  if (std::abs(v - 1.0) < 1e-12) return 1.0;
  return v;
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

std::vector<Point> clip_half_plane(const std::vector<Point>& poly, const Point& s, const Point& q) {
  const Point d = q - s;
  const Point m = 0.5 * (s + q);
  std::vector<Point> out;
  out.reserve(poly.size() + 1);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const double fa = (a - m).dot(d);
    const double fb = (b - m).dot(d);
    if (fa <= 0.0) out.push_back(a);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      const double t = fa / (fa - fb);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

double max_radius(const std::vector<Point>& poly, const Point& s) {
  double r = 0.0;
  for (const Point& p : poly) r = std::max(r, (p - s).norm());
  return r;
}

}  // namespace

std::vector<std::vector<Point>> voronoi_cells(const std::vector<Point>& seeds) {
  const int n = static_cast<int>(seeds.size());
  if (n < 1) fail(ErrorCode::kInvalidArgument, "voronoi diagram needs at least one seed");
  const int g = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
  const double cs = 1.0 / g;
  auto cell_of = [&](double v) { return std::clamp(static_cast<int>(v / cs), 0, g - 1); };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(g * g));
  for (int i = 0; i < n; ++i) {
    const Point& s = seeds[static_cast<std::size_t>(i)];
    if (!(s.x() > 0.0 && s.x() < 1.0 && s.y() > 0.0 && s.y() < 1.0)) {
      fail(ErrorCode::kInvalidArgument, "seed outside the open unit square");
    }
    buckets[static_cast<std::size_t>(cell_of(s.y()) * g + cell_of(s.x()))].push_back(i);
  }

  std::vector<std::vector<Point>> cells(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Point& s = seeds[static_cast<std::size_t>(i)];
    std::vector<Point> poly = {Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)};
    double r = max_radius(poly, s);
    const int gx = cell_of(s.x());
    const int gy = cell_of(s.y());
    for (int k = 0; k <= g; ++k) {
      if (k >= 1 && (k - 1) * cs > 2.0 * r) break;
      for (int by = gy - k; by <= gy + k; ++by) {
        if (by < 0 || by >= g) continue;
        for (int bx = gx - k; bx <= gx + k; ++bx) {
          if (bx < 0 || bx >= g) continue;
          if (std::max(std::abs(bx - gx), std::abs(by - gy)) != k) continue;
          for (int j : buckets[static_cast<std::size_t>(by * g + bx)]) {
            if (j == i) continue;
            const Point& q = seeds[static_cast<std::size_t>(j)];
            if ((q - s).norm() < 1e-14) {
              fail(ErrorCode::kGenerationFailure, "duplicate Voronoi seeds");
            }
            if ((q - s).norm() > 2.0 * r) continue;
            poly = clip_half_plane(poly, s, q);
          }
        }
      }
      r = max_radius(poly, s);
    }
    cells[static_cast<std::size_t>(i)] = std::move(poly);
  }
  return cells;
}

double cvt_energy(const std::vector<Point>& seeds, const std::vector<std::vector<Point>>& cells) {
  double e = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& poly = cells[c];
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Point a = poly[i] - seeds[c];
      const Point b = poly[(i + 1) % poly.size()] - seeds[c];
      e += 0.5 * cross(a, b) / 6.0 * (a.squaredNorm() + a.dot(b) + b.squaredNorm());
    }
  }
  return e;
}

PolyMesh voronoi_diagram(const std::vector<Point>& seeds, double merge_tol) {
  const auto raw = voronoi_cells(seeds);
  PolyMesh mesh;
  // Spatial hash with bucket size merge_tol; neighbors searched in a 3x3 stencil.
  std::unordered_map<long long, std::vector<int>> hash;
  const double inv = 1.0 / merge_tol;
  auto key = [](long long ix, long long iy) { return ix * 4000000007LL + iy; };
  auto find_or_add = [&](Point p) {
    p = Point(snap(p.x()), snap(p.y()));
    const long long ix = static_cast<long long>(std::floor(p.x() * inv));
    const long long iy = static_cast<long long>(std::floor(p.y() * inv));
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = hash.find(key(ix + dx, iy + dy));
        if (it == hash.end()) continue;
        for (int v : it->second) {
          if ((mesh.vertices[static_cast<std::size_t>(v)] - p).norm() <= merge_tol) return v;
        }
      }
    }
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    hash[key(ix, iy)].push_back(id);
    return id;
  };
  for (const auto& poly : raw) {
    std::vector<int> cell;
    for (const Point& p : poly) {
      const int v = find_or_add(p);
      if (cell.empty() || cell.back() != v) cell.push_back(v);
    }
    while (cell.size() > 1 && cell.front() == cell.back()) cell.pop_back();
    if (cell.size() < 3) fail(ErrorCode::kGenerationFailure, "Voronoi cell collapsed during merging");
    mesh.cells.push_back(std::move(cell));
  }
  finalize_mesh(mesh);
  return mesh;
}

void finalize_mesh(PolyMesh& mesh) {
  mesh.boundary.assign(mesh.vertices.size(), false);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    mesh.boundary[v] = on_square_boundary(mesh.vertices[v]);
  }
  mesh.h = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto pts = mesh.cell_points(c);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) mesh.h = std::max(mesh.h, (pts[i] - pts[j]).norm());
    }
  }
}

std::string check_mesh(const PolyMesh& mesh, double area_tol) {
  std::map<std::pair<int, int>, int> directed;
  double area = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cells[static_cast<std::size_t>(c)];
    if (cell.size() < 3) return "cell " + std::to_string(c) + " has fewer than 3 vertices";
    for (int v : cell) {
      if (v < 0 || v >= mesh.num_vertices()) return "cell " + std::to_string(c) + " references bad vertex";
    }
    const double a = signed_area(mesh.cell_points(c));
    if (a <= 0.0) return "cell " + std::to_string(c) + " is not counterclockwise";
    area += a;
    for (std::size_t i = 0; i < cell.size(); ++i) {
      const auto e = std::make_pair(cell[i], cell[(i + 1) % cell.size()]);
      if (++directed[e] > 1) return "edge repeated with the same orientation";
    }
  }
  for (const auto& [e, count] : directed) {
    if (directed.count({e.second, e.first})) continue;
    const Point& a = mesh.vertices[static_cast<std::size_t>(e.first)];
    const Point& b = mesh.vertices[static_cast<std::size_t>(e.second)];
    const Point m = 0.5 * (a + b);
    if (!on_square_boundary(a) || !on_square_boundary(b) || !on_square_boundary(m)) {
      return "interior edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
             ") belongs to a single cell";
    }
  }
  if (std::abs(area - 1.0) > area_tol) return "cell areas do not sum to 1";
  return {};
}

VoronoiResult lloyd_relax(std::vector<Point> seeds, const VoronoiOptions& opt) {
  VoronoiResult res;
  for (int it = 0; it < opt.lloyd_iters; ++it) {
    const auto cells = voronoi_cells(seeds);
    res.energy.push_back(cvt_energy(seeds, cells));
    double disp = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Point centroid = area_centroid(cells[c]);
      disp = std::max(disp, (centroid - seeds[c]).norm());
      seeds[c] = centroid;
    }
    ++res.iterations;
    if (disp < opt.lloyd_tol) break;
  }
  const auto cells = voronoi_cells(seeds);
  res.energy.push_back(cvt_energy(seeds, cells));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    res.residual = std::max(res.residual, (area_centroid(cells[c]) - seeds[c]).norm());
  }
  res.mesh = voronoi_diagram(seeds, opt.merge_tol);
  res.seeds = std::move(seeds);
  return res;
}

namespace {

bool on_side(const Point& p, int side) {
  const double tol = 1e-10;
  switch (side) {
    case 0: return std::abs(p.x()) <= tol;
    case 1: return std::abs(p.x() - 1.0) <= tol;
    case 2: return std::abs(p.y()) <= tol;
    default: return std::abs(p.y() - 1.0) <= tol;
  }
}

int side_count(const Point& p) {
  int k = 0;
  for (int s = 0; s < 4; ++s) k += on_side(p, s);
  return k;
}

bool share_side(const Point& a, const Point& b) {
  for (int s = 0; s < 4; ++s) {
    if (on_side(a, s) && on_side(b, s)) return true;
  }
  return false;
}

bool cells_valid(const PolyMesh& mesh) {
  if (!check_mesh(mesh).empty()) return false;
  try {
    for (int c = 0; c < mesh.num_cells(); ++c) (void)mesh.cell_polygon(c);
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace

int collapse_small_edges(PolyMesh& mesh, double tol) {
  if (!(tol > 0.0)) return 0;
  int total = 0;
  for (int pass = 0; pass < 20; ++pass) {
    std::vector<std::pair<int, int>> cand;
    for (const auto& cell : mesh.cells) {
      const auto k = cell.size();
      if (k < 4) continue;
      Point mid = Point::Zero();
      for (int v : cell) mid += mesh.vertices[static_cast<std::size_t>(v)];
      mid /= static_cast<double>(k);
      const double ideal = 2.0 * std::numbers::pi / static_cast<double>(k);
      for (std::size_t i = 0; i < k; ++i) {
        const Point a = mesh.vertices[static_cast<std::size_t>(cell[i])] - mid;
        const Point b = mesh.vertices[static_cast<std::size_t>(cell[(i + 1) % k])] - mid;
        double beta = std::atan2(b.y(), b.x()) - std::atan2(a.y(), a.x());
        if (beta < 0.0) beta += 2.0 * std::numbers::pi;
        if (beta < tol * ideal) cand.emplace_back(std::min(cell[i], cell[(i + 1) % k]), std::max(cell[i], cell[(i + 1) % k]));
      }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    if (cand.empty()) break;

    // cells through each vertex, to keep every cell at >= 3 vertices
    std::vector<std::vector<int>> cells_of(mesh.vertices.size());
    for (int c = 0; c < mesh.num_cells(); ++c) {
      for (int v : mesh.cells[static_cast<std::size_t>(c)]) cells_of[static_cast<std::size_t>(v)].push_back(c);
    }
    std::vector<int> target(mesh.vertices.size());
    std::iota(target.begin(), target.end(), 0);
    std::vector<char> touched(mesh.vertices.size(), 0);
    std::vector<int> lost(mesh.cells.size(), 0);
    std::vector<Point> verts = mesh.vertices;
    int done = 0;
    for (const auto& [a, b] : cand) {
      if (touched[static_cast<std::size_t>(a)] || touched[static_cast<std::size_t>(b)]) continue;
      const Point& pa = mesh.vertices[static_cast<std::size_t>(a)];
      const Point& pb = mesh.vertices[static_cast<std::size_t>(b)];
      const int sa = side_count(pa), sb = side_count(pb);
      if (sa == 2 && sb == 2) continue;
      if (sa > 0 && sb > 0 && !share_side(pa, pb)) continue;
      bool ok = true;
      std::vector<int> shared;
      for (int c : cells_of[static_cast<std::size_t>(a)]) {
        const auto& cl = cells_of[static_cast<std::size_t>(b)];
        if (std::find(cl.begin(), cl.end(), c) == cl.end()) continue;
        shared.push_back(c);
        if (static_cast<int>(mesh.cells[static_cast<std::size_t>(c)].size()) - lost[static_cast<std::size_t>(c)] < 4) ok = false;
      }
      if (!ok) continue;
      Point pos;
      if (sa > sb) {
        pos = pa;
      } else if (sb > sa) {
        pos = pb;
      } else {
        pos = 0.5 * (pa + pb);
      }
      verts[static_cast<std::size_t>(a)] = pos;
      target[static_cast<std::size_t>(b)] = a;
      touched[static_cast<std::size_t>(a)] = touched[static_cast<std::size_t>(b)] = 1;
      for (int c : shared) ++lost[static_cast<std::size_t>(c)];
      ++done;
    }
    if (done == 0) break;

    PolyMesh next;
    std::vector<int> index(mesh.vertices.size(), -1);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (target[v] == static_cast<int>(v)) {
        index[v] = static_cast<int>(next.vertices.size());
        next.vertices.push_back(verts[v]);
      }
    }
    for (const auto& cell : mesh.cells) {
      std::vector<int> out;
      for (int v : cell) {
        const int w = index[static_cast<std::size_t>(target[static_cast<std::size_t>(v)])];
        if (out.empty() || out.back() != w) out.push_back(w);
      }
      while (out.size() > 1 && out.front() == out.back()) out.pop_back();
      next.cells.push_back(std::move(out));
    }
    finalize_mesh(next);
    if (!cells_valid(next)) break;
    mesh = std::move(next);
    total += done;
  }
  return total;
}

VoronoiResult voronoi_mesh(int n_cells, int lloyd_iters, Rng& rng, VoronoiOptions opt) {
  if (n_cells < 1) fail(ErrorCode::kInvalidArgument, "n_cells must be >= 1");
  opt.lloyd_iters = lloyd_iters;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt <= opt.max_seed_retries; ++attempt) {
    std::vector<Point> seeds(static_cast<std::size_t>(n_cells));
    for (auto& s : seeds) {
      do {
        s = Point(unif(rng), unif(rng));
      } while (s.x() <= 0.0 || s.y() <= 0.0);
    }
    try {
      VoronoiResult r = lloyd_relax(std::move(seeds), opt);
      r.collapsed = collapse_small_edges(r.mesh, opt.collapse_tol);
      return r;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kGenerationFailure) throw;
    }
  }
  fail(ErrorCode::kGenerationFailure, "could not generate a valid Voronoi mesh");
}

void write_mesh(std::ostream& os, const PolyMesh& mesh) {
  os << "POLYMESH v1\n" << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
  os << std::setprecision(17);
  for (const Point& p : mesh.vertices) os << p.x() << ' ' << p.y() << '\n';
  for (const auto& cell : mesh.cells) {
    os << cell.size();
    for (int v : cell) os << ' ' << v;
    os << '\n';
  }
}

PolyMesh read_mesh(std::istream& is) {
  auto err = [](int line, const std::string& msg) {
    fail(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + msg);
  };
  std::string line;
  int ln = 0;
  if (!std::getline(is, line)) err(1, "empty mesh file");
  ++ln;
  if (line.rfind("POLYMESH v1", 0) != 0) err(ln, "expected header `POLYMESH v1`");
  if (!std::getline(is, line)) err(ln + 1, "missing counts");
  ++ln;
  long long nv = -1;
  long long nc = -1;
  {
    std::istringstream ss(line);
    if (!(ss >> nv >> nc) || nv < 0 || nc < 0) err(ln, "bad `nv nc` line");
  }
  PolyMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long long i = 0; i < nv; ++i) {
    if (!std::getline(is, line)) err(ln + 1, "truncated vertex list");
    ++ln;
    std::istringstream ss(line);
    double x = 0.0;
    double y = 0.0;
    if (!(ss >> x >> y)) err(ln, "bad vertex line");
    mesh.vertices.emplace_back(x, y);
  }
  for (long long c = 0; c < nc; ++c) {
    if (!std::getline(is, line)) err(ln + 1, "truncated cell list");
    ++ln;
    std::istringstream ss(line);
    int k = 0;
    if (!(ss >> k) || k < 3) err(ln, "bad cell vertex count");
    std::vector<int> cell(static_cast<std::size_t>(k));
    for (int& v : cell) {
      if (!(ss >> v)) err(ln, "missing cell vertex index");
      if (v < 0 || v >= nv) err(ln, "cell references vertex out of range");
    }
    mesh.cells.push_back(std::move(cell));
  }
  if (mesh.cells.empty()) err(ln, "mesh has no cells");
  finalize_mesh(mesh);
  return mesh;
}

void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIoError, "cannot write " + path.string());
  write_mesh(os, mesh);
}

PolyMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return read_mesh(is);
}

}  // namespace vemrb
