#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vemrb/vem.hpp"

namespace vemrb {

enum class ReconMode { kProjection, kRb, kFe };

struct ReconSpec {
  ReconMode mode = ReconMode::kProjection;
  int M = 1;
  double delta = 0.02;  // fe mesh size on the normalized cell
  const DatabaseSet* dbs = nullptr;
};

/// pi | rb:<M> | fe | fe:<delta>
ReconSpec parse_recon(const std::string& text);
std::string recon_name(const ReconSpec& r);

/// Nodal values of a reconstruction on a per-cell evaluation mesh.
struct CellReconstruction {
  TriMesh mesh;
  Vec values;
};

/// Pi: the projection on a 2-level fan refinement. rb: Pi u + sum_j (u_j -
/// Pi u(v_j)) e_j^rb on the pulled-back reference mesh. fe: the discrete
/// harmonic function with the dofs' edge-linear trace.
CellReconstruction reconstruct_cell(const Polygon& cell, const Vec& dofs, const ReconSpec& spec);

struct ErrorRecord {
  double h = 0.0;
  int ndof = 0;
  double err0 = 0.0;
  double err1 = 0.0;  // full H^1 norm
  double errE = 0.0;
  double errInf = 0.0;
};

ErrorRecord error_norms(const PolyMesh& mesh, const Vec& dofs, const DiffusionProblem& prob, const ReconSpec& spec);

/// Largest spread of the reconstructed values at each mesh vertex over the
/// cells sharing it, and largest deviation from the dof.
struct VertexAgreement {
  double jump = 0.0;
  double dof_gap = 0.0;
};
VertexAgreement vertex_agreement(const PolyMesh& mesh, const Vec& dofs, const ReconSpec& spec);

struct LineSample {
  double t = 0.0;
  Point x = Point::Zero();
  int cell = -1;
  double value = 0.0;
  std::optional<double> other;  // Pi mode: value from a second cell at interfaces
};

std::vector<LineSample> line_sample(const PolyMesh& mesh, const Vec& dofs, const Point& a, const Point& b,
                                    int count, const ReconSpec& spec);

struct ConvergenceRecord {
  ErrorRecord err;
  std::string mode;
  std::string stab;
  std::optional<double> rate0, rate1, rateE, rateInf;
};

/// rate = log(e_k / e_{k-1}) / log(h_k / h_{k-1}) within each (mode, stab) sequence.
void fill_rates(std::vector<ConvergenceRecord>& records);
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records);

using SolveHook = std::function<void(const PolyMesh&, const StabConfig&, const VemSolution&)>;

/// Runs every stabilization on every mesh and measures every reconstruction.
/// `on_solve` sees each discrete solution before it is measured.
std::vector<ConvergenceRecord> convergence_study(const std::vector<PolyMesh>& meshes, const DiffusionProblem& prob,
                                                 const std::vector<StabConfig>& stabs,
                                                 const std::vector<ReconSpec>& modes, const SolveHook& on_solve = {});

/// `VEMFIELD v1`, then per cell: `cell c npoints ntriangles`, points `x y value`,
/// triangles `i j k` (local indices).
void write_field(std::ostream& os, const PolyMesh& mesh, const Vec& dofs, const ReconSpec& spec);

// Solution file: `VEMSOL v1`, vertex count, one dof per line.
void write_solution(std::ostream& os, const Vec& dofs);
Vec read_solution(std::istream& is);

/// Per-polygon timings of the three reconstructions of one dof vector.
struct TimingRow {
  int n = 0;
  double pi_build = 0.0;
  double pi_apply = 0.0;
  double fe_assemble = 0.0;
  double fe_solve = 0.0;
  double rb_assemble = 0.0;
  double rb_solve = 0.0;
};

TimingRow time_reconstructions(const Polygon& p, const Vec& dofs, const RBDatabase& db, int M, double fe_delta);

/// Relative full-H^1 gap ||u_fe - u_M||/||u_fe|| on the matched mesh for each M
/// (M = 0 is the projection).
std::vector<double> validation_errors(const Polygon& p, const Vec& dofs, const RBDatabase& db,
                                      const std::vector<int>& Ms);

}  // namespace vemrb
