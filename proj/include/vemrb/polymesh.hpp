#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "vemrb/geometry.hpp"

namespace vemrb {

/// Polygonal mesh of the unit square. Cells are CCW vertex-index lists.
struct PolyMesh {
  std::vector<Point> vertices;
  std::vector<std::vector<int>> cells;
  std::vector<bool> boundary;  // per vertex, on the boundary of the square
  double h = 0.0;               // max cell diameter

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  Polygon cell_polygon(int c) const;
  std::vector<Point> cell_points(int c) const;
};

/// Recomputes boundary flags and h from vertices/cells.
void finalize_mesh(PolyMesh& mesh);

/// Checks the structural invariants (CCW cells, edge pairing, area sum);
/// returns an empty string when valid, else a description of the violation.
std::string check_mesh(const PolyMesh& mesh, double area_tol = 1e-10);

struct VoronoiOptions {
  int lloyd_iters = 100;
  double lloyd_tol = 1e-8;      // stop when max seed displacement falls below
  double merge_tol = 1e-10;     // vertices closer than this are merged
  int max_seed_retries = 10;
  double collapse_tol = 0.1;    // small-edge collapse after relaxation; 0 disables
};

struct VoronoiResult {
  PolyMesh mesh;
  std::vector<Point> seeds;       // seeds of the returned diagram
  int iterations = 0;             // Lloyd iterations performed
  double residual = 0.0;          // max |centroid - seed| of the final diagram
  std::vector<double> energy;     // CVT energy before each iteration and at the end
  int collapsed = 0;              // edges removed by the small-edge collapse
};

/// Clipped Voronoi diagram of the unit square for the given seeds.
PolyMesh voronoi_diagram(const std::vector<Point>& seeds, double merge_tol = 1e-10);

/// Voronoi cells (unmerged, one polygon per seed) of the unit square.
std::vector<std::vector<Point>> voronoi_cells(const std::vector<Point>& seeds);

/// Sum over cells of the integral of |x - seed|^2.
double cvt_energy(const std::vector<Point>& seeds, const std::vector<std::vector<Point>>& cells);

/// Lloyd-relaxed (centroidal) Voronoi mesh from explicit initial seeds.
VoronoiResult lloyd_relax(std::vector<Point> seeds, const VoronoiOptions& opt = {});

/// Collapses edges that subtend an angle below tol * 2*pi/k at the vertex
/// average of a k-gon (k >= 4), as PolyMesher does. Boundary vertices stay on
/// the boundary and corners stay fixed; collapses that would leave an invalid
/// mesh are skipped. Returns the number of collapsed edges.
int collapse_small_edges(PolyMesh& mesh, double tol);

/// Centroidal Voronoi tessellation with `n_cells` uniformly drawn seeds,
/// followed by the small-edge collapse.
VoronoiResult voronoi_mesh(int n_cells, int lloyd_iters, Rng& rng, VoronoiOptions opt = {});

// Text format: `POLYMESH v1`, `nv nc`, nv lines `x y`, nc lines `k i1 ... ik`.
void write_mesh(std::ostream& os, const PolyMesh& mesh);
PolyMesh read_mesh(std::istream& is);
void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path);
PolyMesh load_mesh(const std::filesystem::path& path);

}  // namespace vemrb
