#include "vemrb/postprocess.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "vemrb/error.hpp"
#include "vemrb/parallel.hpp"

namespace vemrb {

namespace {

constexpr int kProjectionLevel = 2;

double parse_number(const std::string& s, const std::string& whole) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "bad reconstruction mode " + whole);
  }
}

Vec projection_values(const LocalProjector& pr, const Vec& dofs, const std::vector<Point>& points) {
  Vec v(static_cast<Eigen::Index>(points.size()));
  for (std::size_t k = 0; k < points.size(); ++k) v[static_cast<Eigen::Index>(k)] = projector_value(pr, dofs, points[k]);
  return v;
}

const RBDatabase* database_for(const ReconSpec& spec, int n) {
  const RBDatabase* db = spec.dbs ? spec.dbs->get(n) : nullptr;
  if (!db) fail(ErrorCode::kNoDatabaseForN, "no database for N=" + std::to_string(n));
  return db;
}

Vec rb_values(const Polygon& cell, const LocalProjector& pr, const Vec& dofs, const RBBasisEval& eval,
              const TriMesh& mesh) {
  Vec values = projection_values(pr, dofs, mesh.nodes);
  for (int j = 0; j < cell.size(); ++j) {
    const double jump = dofs[j] - projector_value(pr, dofs, cell.vertex(j));
    if (jump != 0.0) values.noalias() += jump * reconstruct_on_reference(eval, j);
  }
  return values;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec cell_dofs(const PolyMesh& mesh, const Vec& dofs, int c) {
  const auto& idx = mesh.cells[static_cast<std::size_t>(c)];
  Vec local(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) local[static_cast<Eigen::Index>(k)] = dofs[idx[k]];
  return local;
}

std::vector<CellReconstruction> reconstruct_all(const PolyMesh& mesh, const Vec& dofs, const ReconSpec& spec) {
  std::vector<CellReconstruction> out(static_cast<std::size_t>(mesh.num_cells()));
  parallel_for(mesh.num_cells(), [&](int c) {
    try {
      out[static_cast<std::size_t>(c)] = reconstruct_cell(mesh.cell_polygon(c), cell_dofs(mesh, dofs, c), spec);
    } catch (const Error& e) {
      fail(e.code(), "cell " + std::to_string(c) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace

ReconSpec parse_recon(const std::string& text) {
  ReconSpec r;
  if (text == "pi") {
    r.mode = ReconMode::kProjection;
  } else if (text == "rb" || text.rfind("rb:", 0) == 0) {
    r.mode = ReconMode::kRb;
    if (text.size() > 3) r.M = static_cast<int>(parse_number(text.substr(3), text));
    if (r.M < 0) fail(ErrorCode::kInvalidArgument, "bad reconstruction mode " + text);
  } else if (text == "fe" || text.rfind("fe:", 0) == 0) {
    r.mode = ReconMode::kFe;
    if (text.size() > 3) r.delta = parse_number(text.substr(3), text);
    if (!(r.delta > 0.0)) fail(ErrorCode::kInvalidArgument, "bad reconstruction mode " + text);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown reconstruction mode " + text);
  }
  return r;
}

std::string recon_name(const ReconSpec& r) {
  switch (r.mode) {
    case ReconMode::kProjection: return "pi";
    case ReconMode::kRb: return "rb:" + std::to_string(r.M);
    case ReconMode::kFe: {
      std::ostringstream os;
      os << "fe:" << r.delta;
      return os.str();
    }
  }
  return "?";
}

CellReconstruction reconstruct_cell(const Polygon& cell, const Vec& dofs, const ReconSpec& spec) {
  if (dofs.size() != cell.size()) fail(ErrorCode::kInvalidArgument, "dof count differs from vertex count");
  const LocalProjector pr = local_projector(cell);
  CellReconstruction r;
  switch (spec.mode) {
    case ReconMode::kProjection: {
      r.mesh = triangulate_level(cell, kProjectionLevel);
      r.values = projection_values(pr, dofs, r.mesh.nodes);
      break;
    }
    case ReconMode::kRb: {
      if (cell.size() == 3) {
        // the local space is P1, so the projection already interpolates
        r.mesh = triangulate_level(cell, level_for_delta(normalize(cell).polygon, spec.delta));
        r.values = projection_values(pr, dofs, r.mesh.nodes);
        break;
      }
      const RBDatabase* db = database_for(spec, cell.size());
      const RBBasisEval eval = reduced_solve(cell, *db, std::min(spec.M, db->m_max));
      r.mesh = pulled_back_mesh(eval, cell);
      r.values = rb_values(cell, pr, dofs, eval, r.mesh);
      break;
    }
    case ReconMode::kFe: {
      r.mesh = triangulate_level(cell, level_for_delta(normalize(cell).polygon, spec.delta));
      DirichletSolver solver(r.mesh);
      r.values = solver.solve(trace_from_dofs(r.mesh, dofs));
      break;
    }
  }
  return r;
}

ErrorRecord error_norms(const PolyMesh& mesh, const Vec& dofs, const DiffusionProblem& prob, const ReconSpec& spec) {
  if (!prob.exact) fail(ErrorCode::kInvalidArgument, "problem " + prob.name + " has no exact solution");
  const int nc = mesh.num_cells();
  std::vector<ErrorIntegrals> parts(static_cast<std::size_t>(nc));
  parallel_for(nc, [&](int c) {
    try {
      const CellReconstruction r = reconstruct_cell(mesh.cell_polygon(c), cell_dofs(mesh, dofs, c), spec);
      parts[static_cast<std::size_t>(c)] = error_integrals(r.mesh, r.values, *prob.exact, prob.K);
    } catch (const Error& e) {
      fail(e.code(), "cell " + std::to_string(c) + ": " + e.what());
    }
  });
  ErrorIntegrals sum;
  for (const auto& p : parts) sum += p;
  ErrorRecord rec;
  rec.h = mesh.h;
  rec.ndof = mesh.num_vertices();
  auto ratio = [](double num, double den) { return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num); };
  rec.err0 = ratio(sum.err_l2_sq, sum.ref_l2_sq);
  rec.err1 = ratio(sum.err_l2_sq + sum.err_h1_semi_sq, sum.ref_l2_sq + sum.ref_h1_semi_sq);
  rec.errE = ratio(sum.err_energy_sq, sum.ref_energy_sq);
  rec.errInf = sum.ref_max > 0.0 ? sum.err_max / sum.ref_max : sum.err_max;
  return rec;
}

VertexAgreement vertex_agreement(const PolyMesh& mesh, const Vec& dofs, const ReconSpec& spec) {
  const std::vector<CellReconstruction> recs = reconstruct_all(mesh, dofs, spec);
  std::vector<double> lo(static_cast<std::size_t>(mesh.num_vertices()), std::numeric_limits<double>::infinity());
  std::vector<double> hi(lo.size(), -std::numeric_limits<double>::infinity());
  VertexAgreement out;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& idx = mesh.cells[static_cast<std::size_t>(c)];
    const CellReconstruction& r = recs[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double v = r.values[r.mesh.vertex_nodes[k]];
      const auto g = static_cast<std::size_t>(idx[k]);
      lo[g] = std::min(lo[g], v);
      hi[g] = std::max(hi[g], v);
      out.dof_gap = std::max(out.dof_gap, std::abs(v - dofs[idx[k]]));
    }
  }
  for (std::size_t g = 0; g < lo.size(); ++g) {
    if (hi[g] >= lo[g]) out.jump = std::max(out.jump, hi[g] - lo[g]);
  }
  return out;
}

std::vector<LineSample> line_sample(const PolyMesh& mesh, const Vec& dofs, const Point& a, const Point& b,
                                    int count, const ReconSpec& spec) {
  if (count < 2) fail(ErrorCode::kInvalidArgument, "line sampling needs at least two points");
  const double tol = 1e-10;
  std::vector<Polygon> cells;
  cells.reserve(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c) cells.push_back(mesh.cell_polygon(c));
  std::map<int, CellReconstruction> cache;
  auto value_in = [&](int c, const Point& x) {
    auto it = cache.find(c);
    if (it == cache.end()) {
      it = cache.emplace(c, reconstruct_cell(cells[static_cast<std::size_t>(c)], cell_dofs(mesh, dofs, c), spec)).first;
    }
    return interpolate(it->second.mesh, it->second.values, x);
  };
  std::vector<LineSample> out;
  for (int k = 0; k < count; ++k) {
    LineSample s;
    s.t = static_cast<double>(k) / (count - 1);
    s.x = (1.0 - s.t) * a + s.t * b;
    std::vector<int> hits;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      if (contains(cells[static_cast<std::size_t>(c)], s.x, tol)) hits.push_back(c);
    }
    if (hits.empty()) fail(ErrorCode::kOutOfDomain, "sample point outside every cell");
    s.cell = hits.front();
    s.value = value_in(s.cell, s.x);
    if (spec.mode == ReconMode::kProjection && hits.size() > 1) s.other = value_in(hits[1], s.x);
    out.push_back(s);
  }
  return out;
}

void fill_rates(std::vector<ConvergenceRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::size_t> last;
  auto rate = [](double e1, double e0, double h1, double h0) -> std::optional<double> {
    if (!(e1 > 0.0) || !(e0 > 0.0) || h1 == h0) return std::nullopt;
    return std::log(e1 / e0) / std::log(h1 / h0);
  };
  for (std::size_t k = 0; k < records.size(); ++k) {
    auto& r = records[k];
    r.rate0 = r.rate1 = r.rateE = r.rateInf = std::nullopt;
    const auto key = std::make_pair(r.mode, r.stab);
    const auto it = last.find(key);
    if (it != last.end()) {
      const auto& p = records[it->second].err;
      r.rate0 = rate(r.err.err0, p.err0, r.err.h, p.h);
      r.rate1 = rate(r.err.err1, p.err1, r.err.h, p.h);
      r.rateE = rate(r.err.errE, p.errE, r.err.h, p.h);
      r.rateInf = rate(r.err.errInf, p.errInf, r.err.h, p.h);
    }
    last[key] = k;
  }
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records) {
  os << "h,ndof,mode,stab,err0,err1,errE,errInf,rate0,rate1,rateE,rateInf\n";
  const auto old = os.precision(17);
  auto opt = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  for (const auto& r : records) {
    os << r.err.h << ',' << r.err.ndof << ',' << r.mode << ',' << r.stab << ',' << r.err.err0 << ','
       << r.err.err1 << ',' << r.err.errE << ',' << r.err.errInf << ',';
    opt(r.rate0);
    os << ',';
    opt(r.rate1);
    os << ',';
    opt(r.rateE);
    os << ',';
    opt(r.rateInf);
    os << '\n';
  }
  os.precision(old);
}

std::vector<ConvergenceRecord> convergence_study(const std::vector<PolyMesh>& meshes, const DiffusionProblem& prob,
                                                 const std::vector<StabConfig>& stabs,
                                                 const std::vector<ReconSpec>& modes, const SolveHook& on_solve) {
  for (std::size_t k = 1; k < meshes.size(); ++k) {
    if (!(meshes[k].h < meshes[k - 1].h)) fail(ErrorCode::kInvalidArgument, "meshes must be ordered by decreasing h");
  }
  std::vector<ConvergenceRecord> out;
  for (const auto& stab : stabs) {
    for (const auto& mesh : meshes) {
      const VemSolution sol = assemble_and_solve(mesh, prob, stab);
      if (on_solve) on_solve(mesh, stab, sol);
      for (const auto& mode : modes) {
        ConvergenceRecord r;
        r.err = error_norms(mesh, sol.dofs, prob, mode);
        r.mode = recon_name(mode);
        r.stab = stab_name(stab);
        out.push_back(std::move(r));
      }
    }
  }
  fill_rates(out);
  return out;
}

void write_field(std::ostream& os, const PolyMesh& mesh, const Vec& dofs, const ReconSpec& spec) {
  const std::vector<CellReconstruction> recs = reconstruct_all(mesh, dofs, spec);
  const auto old = os.precision(17);
  os << "VEMFIELD v1\n" << mesh.num_cells() << ' ' << recon_name(spec) << '\n';
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellReconstruction& r = recs[static_cast<std::size_t>(c)];
    os << "cell " << c << ' ' << r.mesh.num_nodes() << ' ' << r.mesh.num_triangles() << '\n';
    for (int k = 0; k < r.mesh.num_nodes(); ++k) {
      const Point& x = r.mesh.nodes[static_cast<std::size_t>(k)];
      os << x.x() << ' ' << x.y() << ' ' << r.values[k] << '\n';
    }
    for (const auto& t : r.mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  os.precision(old);
}

void write_solution(std::ostream& os, const Vec& dofs) {
  const auto old = os.precision(17);
  os << "VEMSOL v1\n" << dofs.size() << '\n';
  for (Eigen::Index k = 0; k < dofs.size(); ++k) os << dofs[k] << '\n';
  os.precision(old);
}

Vec read_solution(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header.rfind("VEMSOL v1", 0) != 0) fail(ErrorCode::kParseError, "line 1: expected VEMSOL v1");
  long long n = -1;
  if (!(is >> n) || n < 0) fail(ErrorCode::kParseError, "line 2: bad vertex count");
  Vec dofs(static_cast<Eigen::Index>(n));
  for (long long k = 0; k < n; ++k) {
    if (!(is >> dofs[static_cast<Eigen::Index>(k)])) {
      fail(ErrorCode::kParseError, "line " + std::to_string(k + 3) + ": bad dof value");
    }
  }
  return dofs;
}

TimingRow time_reconstructions(const Polygon& p, const Vec& dofs, const RBDatabase& db, int M, double fe_delta) {
  using clock = std::chrono::steady_clock;
  TimingRow row;
  row.n = p.size();

  auto t0 = clock::now();
  const LocalProjector pr = local_projector(p);
  row.pi_build = seconds_since(t0);

  // the projection is evaluated on the same points as the rb reconstruction
  t0 = clock::now();
  const TriMesh eval_mesh = triangulate_level(Polygon(p.vertices(), area_centroid(p.vertices())), db.ref_mesh.level);
  const Vec pi = projection_values(pr, dofs, eval_mesh.nodes);
  row.pi_apply = seconds_since(t0);

  t0 = clock::now();
  const TriMesh fe_mesh = triangulate_level(p, level_for_delta(normalize(p).polygon, fe_delta));
  SpMat k = assemble_stiffness(fe_mesh);
  row.fe_assemble = seconds_since(t0);
  t0 = clock::now();
  DirichletSolver solver(fe_mesh, std::move(k), true);
  const Vec fe = solver.solve(trace_from_dofs(fe_mesh, dofs));
  row.fe_solve = seconds_since(t0);

  t0 = clock::now();
  const NormalizedPolygon np = normalize(p);
  const AffineMap map = build_affine_map(np.polygon);
  const auto c = laplace_coefficients(map);
  std::vector<Mat> a(static_cast<std::size_t>(db.n));
  std::vector<Vec> f(static_cast<std::size_t>(db.n));
  for (int j = 0; j < db.n; ++j) reduced_system(db, c, j, M, a[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(j)]);
  row.rb_assemble = seconds_since(t0);
  t0 = clock::now();
  Vec w;
  double sink = 0.0;
  for (int j = 0; j < db.n; ++j) {
    solve_reduced(a[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(j)], w);
    sink += w.sum();
  }
  row.rb_solve = seconds_since(t0);
  if (!std::isfinite(sink + pi.sum() + fe.sum())) fail(ErrorCode::kNumericFailure, "non-finite reconstruction");
  return row;
}

std::vector<double> validation_errors(const Polygon& p, const Vec& dofs, const RBDatabase& db,
                                      const std::vector<int>& Ms) {
  if (p.size() != db.n) fail(ErrorCode::kNoDatabaseForN, "no database for N=" + std::to_string(p.size()));
  const LocalProjector pr = local_projector(p);
  const TriMesh mesh = triangulate_level(Polygon(p.vertices(), area_centroid(p.vertices())), db.ref_mesh.level);
  DirichletSolver solver(mesh);
  const Vec fe = solver.solve(trace_from_dofs(mesh, dofs));
  const double ref = field_norms(mesh, fe).h1();
  std::vector<double> out;
  out.reserve(Ms.size());
  for (int M : Ms) {
    Vec u;
    if (M == 0) {
      u = projection_values(pr, dofs, mesh.nodes);
    } else {
      const RBBasisEval eval = reduced_solve(p, db, M);
      u = rb_values(p, pr, dofs, eval, mesh);
    }
    const double gap = field_norms(mesh, fe - u).h1();
    out.push_back(ref > 0.0 ? gap / ref : gap);
  }
  return out;
}

}  // namespace vemrb
