// vemrb: command-line driver for the VEM / reduced-basis pipeline.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vemrb/error.hpp"
#include "vemrb/parallel.hpp"
#include "vemrb/polymesh.hpp"
#include "vemrb/postprocess.hpp"
#include "vemrb/problems.hpp"
#include "vemrb/rb_database_io.hpp"
#include "vemrb/rb_offline.hpp"

namespace fs = std::filesystem;
using namespace vemrb;

namespace {

constexpr const char* kVersion = "vemrb 1.0.0";
constexpr int kUsageExit = 2;
constexpr int kInternalExit = 1;

struct Common {
  std::uint64_t seed = 1;
  int threads = 1;
};

int exit_code(ErrorCode c) { return 10 + static_cast<int>(c); }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return is;
}

void echo_config(const CLI::App& sub, const Common& c, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream os = open_out(dir / "config.echo.txt");
  os << "# " << kVersion << '\n';
  os << "command=\"" << sub.get_name() << "\"\n";
  os << "seed=" << c.seed << "\nthreads=" << c.threads << '\n';
  os << sub.config_to_str(true, false);
}

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

// Every stream of randomness derives from --seed plus a fixed purpose tag.
Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(extra)};
  return Rng(seq);
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

PolyMesh mesh_for(int cells, int lloyd, std::uint64_t seed) {
  Rng rng = make_rng(seed, 1, static_cast<std::uint64_t>(cells));
  return voronoi_mesh(cells, lloyd, rng).mesh;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct ProblemFlags {
  std::string name = "poisson";
  ProblemParams params;
};

void add_problem_flags(CLI::App* app, ProblemFlags& p) {
  app->add_option("--problem", p.name, "poisson | custom | test1 | test2 | patch | line | jump")->capture_default_str();
  app->add_option("--nu", p.params.nu, "Frequency of the test1 solution")->capture_default_str();
  app->add_option("--nu1", p.params.nu1, "First frequency of the test2 solution")->capture_default_str();
  app->add_option("--nu2", p.params.nu2, "Second frequency of the test2 solution")->capture_default_str();
}

DatabaseSet load_dbs_if(const std::string& root) {
  if (root.empty()) return {};
  return DatabaseSet::load(root);
}

// ---------------------------------------------------------------- commands

struct MeshArgs {
  int cells = 100;
  int lloyd = 100;
  std::string out = "mesh.txt";
};

void run_mesh(const MeshArgs& a, const Common& c) {
  Rng rng = make_rng(c.seed, 1, static_cast<std::uint64_t>(a.cells));
  const VoronoiResult r = voronoi_mesh(a.cells, a.lloyd, rng);
  std::ofstream os = open_out(a.out);
  write_mesh(os, r.mesh);
  std::cout << "cells " << r.mesh.num_cells() << " vertices " << r.mesh.num_vertices() << " h " << r.mesh.h
            << " lloyd_iterations " << r.iterations << " residual " << r.residual << '\n';
}

struct DatasetArgs {
  int n = 6;
  int count = 5000;
  std::string out = "polygons.txt";
};

void run_gen_dataset(const DatasetArgs& a, const Common& c) {
  Rng rng = make_rng(c.seed, 2, static_cast<std::uint64_t>(a.n));
  PolygonSet set;
  set.n = a.n;
  set.seed = c.seed;
  set.polygons.reserve(static_cast<std::size_t>(a.count));
  for (int k = 0; k < a.count; ++k) set.polygons.push_back(generate_convex_polygon(a.n, rng));
  std::ofstream os = open_out(a.out);
  write_polyset(os, set);
}

struct OfflineArgs {
  std::string n = "6";
  int train = 100;
  int mmax = 20;
  double delta = 0.02;
  double delta_k = 0.02;
  std::string snapshot_mesh = "matched";
  std::string out = "db";
};

void run_offline(const OfflineArgs& a, const Common& c) {
  OfflineOptions opt;
  opt.P = a.train;
  opt.m_max = a.mmax;
  opt.delta = a.delta;
  opt.delta_k = a.delta_k;
  opt.seed = c.seed;
  if (a.snapshot_mesh == "matched") {
    opt.mesh_mode = SnapshotMesh::kMatched;
  } else if (a.snapshot_mesh == "independent") {
    opt.mesh_mode = SnapshotMesh::kIndependent;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown snapshot mesh mode " + a.snapshot_mesh);
  }
  for (const auto& s : split(a.n)) {
    const int n = std::stoi(s);
    const OfflineResult r = build_database(n, opt);
    save_db(r.db, db_dir(a.out, n));
    std::cout << "N=" << n << " level " << r.db.ref_mesh.level << " nodes " << r.db.ref_mesh.num_nodes()
              << " rejected " << r.snapshots.rejected << " lambda_1 " << r.db.eigenvalues[0] << '\n';
  }
}

struct ValidateArgs {
  std::string db = "db";
  int n = 6;
  int tests = 500;
  std::string m = "0,1,2,5,10,20";
  std::string out = "stats.csv";
};

void run_validate(const ValidateArgs& a, const Common& c) {
  const DatabaseSet dbs = DatabaseSet::load(a.db);
  const RBDatabase* db = dbs.get(a.n);
  if (!db) fail(ErrorCode::kNoDatabaseForN, "no database for N=" + std::to_string(a.n));
  std::vector<int> Ms;
  for (const auto& s : split(a.m)) Ms.push_back(std::stoi(s));
  for (int M : Ms) {
    if (M < 0 || M > db->m_max) fail(ErrorCode::kInvalidArgument, "M=" + std::to_string(M) + " outside [0, M_max]");
  }

  Rng rng = make_rng(c.seed, 3, static_cast<std::uint64_t>(a.n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Polygon> polys;
  std::vector<Vec> random_dofs;
  for (int t = 0; t < a.tests; ++t) {
    polys.push_back(generate_convex_polygon(a.n, rng));
    Vec d(a.n);
    for (int j = 0; j < a.n; ++j) d[j] = unit(rng);
    random_dofs.push_back(d);
  }

  const char* cases[2] = {"smooth", "random"};
  // errors[case][test] holds one entry per M
  std::vector<std::vector<std::vector<double>>> errors(2, std::vector<std::vector<double>>(polys.size()));
  parallel_for(a.tests, [&](int t) {
    const Polygon& p = polys[static_cast<std::size_t>(t)];
    Vec smooth(a.n);
    for (int j = 0; j < a.n; ++j) {
      const Point& v = p.vertex(j);
      smooth[j] = std::pow(v.x(), 5) + std::pow(v.y(), 5);
    }
    errors[0][static_cast<std::size_t>(t)] = validation_errors(p, smooth, *db, Ms);
    errors[1][static_cast<std::size_t>(t)] = validation_errors(p, random_dofs[static_cast<std::size_t>(t)], *db, Ms);
  });

  std::ofstream os = open_out(a.out);
  os.precision(17);
  os << "case,polygon,M,error\n";
  for (int k = 0; k < 2; ++k) {
    for (int t = 0; t < a.tests; ++t) {
      for (std::size_t i = 0; i < Ms.size(); ++i) {
        os << cases[k] << ',' << t << ',' << Ms[i] << ',' << errors[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)][i]
           << '\n';
      }
    }
  }
  for (int k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < Ms.size(); ++i) {
      std::vector<double> v;
      for (int t = 0; t < a.tests; ++t) v.push_back(errors[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)][i]);
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      os << cases[k] << ",min," << Ms[i] << ',' << percentile(v, 0.0) << '\n';
      os << cases[k] << ",p5," << Ms[i] << ',' << percentile(v, 0.05) << '\n';
      os << cases[k] << ",median," << Ms[i] << ',' << percentile(v, 0.5) << '\n';
      os << cases[k] << ",mean," << Ms[i] << ',' << mean << '\n';
      os << cases[k] << ",p95," << Ms[i] << ',' << percentile(v, 0.95) << '\n';
      os << cases[k] << ",max," << Ms[i] << ',' << percentile(v, 1.0) << '\n';
    }
  }
}

struct SolveArgs {
  std::string mesh;
  std::string stab = "dofi";
  std::string db;
  int m = 1;
  std::string fallback = "error";
  std::string out = "sol.txt";
  ProblemFlags problem;
};

StabConfig stab_from(const std::string& text, int default_m, const DatabaseSet& dbs, const std::string& fallback) {
  StabConfig s = parse_stab(text);
  if (s.kind == StabKind::kRb && text == "rb") s.M = default_m;
  s.dbs = &dbs;
  if (fallback == "dofi") {
    s.fallback = FallbackPolicy::kDofi;
  } else if (fallback != "error") {
    fail(ErrorCode::kInvalidArgument, "unknown fallback policy " + fallback);
  }
  return s;
}

void run_solve(const SolveArgs& a, const Common&) {
  const PolyMesh mesh = load_mesh(a.mesh);
  const DatabaseSet dbs = load_dbs_if(a.db);
  const DiffusionProblem prob = make_problem(a.problem.name, a.problem.params);
  const StabConfig stab = stab_from(a.stab, a.m, dbs, a.fallback);
  if (stab.kind == StabKind::kRb && a.db.empty()) fail(ErrorCode::kDbNotFound, "rb stabilization needs --db");
  const VemSolution sol = assemble_and_solve(mesh, prob, stab);
  std::ofstream os = open_out(a.out);
  write_solution(os, sol.dofs);
  std::cout << "residual " << sol.residual << " downgraded_cells " << sol.downgraded_cells << '\n';
  if (prob.exact) {
    double err = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      err = std::max(err, std::abs(sol.dofs[v] - prob.exact->value(mesh.vertices[static_cast<std::size_t>(v)])));
    }
    std::cout << "max_dof_error " << err << '\n';
  }
}

struct ConvergenceArgs {
  std::string stabs = "dofi,drecipe,rb:1";
  std::string modes = "pi";
  std::string cells = "100,400,1600";
  int lloyd = 100;
  std::string db;
  std::string fallback = "error";
  bool condition = false;
  std::string out = "run";
  ProblemFlags problem;
};

std::vector<ReconSpec> recon_list(const std::string& text, const DatabaseSet& dbs) {
  std::vector<ReconSpec> out;
  for (const auto& s : split(text)) {
    ReconSpec r = parse_recon(s);
    r.dbs = &dbs;
    out.push_back(r);
  }
  return out;
}

void run_convergence(const ConvergenceArgs& a, const Common& c) {
  const DatabaseSet dbs = load_dbs_if(a.db);
  const DiffusionProblem prob = make_problem(a.problem.name, a.problem.params);
  std::vector<StabConfig> stabs;
  for (const auto& s : split(a.stabs)) stabs.push_back(stab_from(s, 1, dbs, a.fallback));
  const std::vector<ReconSpec> modes = recon_list(a.modes, dbs);
  std::vector<PolyMesh> meshes;
  for (const auto& s : split(a.cells)) meshes.push_back(mesh_for(std::stoi(s), a.lloyd, c.seed));

  std::ostringstream cond;
  cond.precision(17);
  cond << "h,ndof,stab,kappa,largest,smallest\n";
  SolveHook hook;
  if (a.condition) {
    hook = [&](const PolyMesh& m, const StabConfig& s, const VemSolution& sol) {
      const ConditionEstimate ce = condition_estimate(sol.interior_matrix, sol.symmetric);
      cond << m.h << ',' << m.num_vertices() << ',' << stab_name(s) << ',' << ce.kappa << ',' << ce.largest << ','
           << ce.smallest << '\n';
    };
  }
  const auto records = convergence_study(meshes, prob, stabs, modes, hook);
  const fs::path dir(a.out);
  std::ofstream csv = open_out(dir / "convergence.csv");
  write_convergence_csv(csv, records);
  std::ofstream meta = open_out(dir / "convergence.meta.txt");
  meta << "problem " << prob.name << '\n'
       << "err1 relative full H1 norm\n"
       << "errE energy norm with the symmetric part of the tensor\n"
       << "errInf maximum over evaluation-mesh nodes (pi: 2-level fan refinement; rb: pulled-back reference mesh; "
          "fe: per-cell mesh)\n";
  if (a.condition) {
    std::ofstream os = open_out(dir / "condition.csv");
    os << cond.str();
  }
}

struct ReconstructArgs {
  std::string mesh;
  std::string solution;
  std::string mode = "pi";
  std::string db;
  std::string field;
  std::string line;
  int samples = 201;
  std::string line_out = "line.csv";
};

void write_line(const fs::path& path, const std::vector<LineSample>& samples) {
  std::ofstream os = open_out(path);
  os.precision(17);
  os << "t,x,y,cell,value,other\n";
  for (const auto& s : samples) {
    os << s.t << ',' << s.x.x() << ',' << s.x.y() << ',' << s.cell << ',' << s.value << ',';
    if (s.other) os << *s.other;
    os << '\n';
  }
}

std::pair<Point, Point> parse_segment(const std::string& text) {
  const auto parts = split(text);
  if (parts.size() != 4) fail(ErrorCode::kInvalidArgument, "segment must be x0,y0,x1,y1");
  return {Point(std::stod(parts[0]), std::stod(parts[1])), Point(std::stod(parts[2]), std::stod(parts[3]))};
}

void run_reconstruct(const ReconstructArgs& a, const Common&) {
  const PolyMesh mesh = load_mesh(a.mesh);
  std::ifstream is = open_in(a.solution);
  const Vec dofs = read_solution(is);
  if (dofs.size() != mesh.num_vertices()) fail(ErrorCode::kInvalidArgument, "solution does not match the mesh");
  const DatabaseSet dbs = load_dbs_if(a.db);
  ReconSpec spec = parse_recon(a.mode);
  spec.dbs = &dbs;
  if (!a.field.empty()) {
    std::ofstream os = open_out(a.field);
    write_field(os, mesh, dofs, spec);
  }
  if (!a.line.empty()) {
    const auto [p, q] = parse_segment(a.line);
    write_line(a.line_out, line_sample(mesh, dofs, p, q, a.samples, spec));
  }
  const VertexAgreement va = vertex_agreement(mesh, dofs, spec);
  std::cout << "vertex_jump " << va.jump << " dof_gap " << va.dof_gap << '\n';
}

struct BenchArgs {
  std::string db = "db";
  int n = 6;
  int tests = 100;
  int m = 60;
  double delta = 0.01;
  std::string out = "bench.csv";
};

void run_bench(const BenchArgs& a, const Common& c) {
  const DatabaseSet dbs = DatabaseSet::load(a.db);
  const RBDatabase* db = dbs.get(a.n);
  if (!db) fail(ErrorCode::kNoDatabaseForN, "no database for N=" + std::to_string(a.n));
  const int M = std::min(a.m, db->m_max);
  Rng rng = make_rng(c.seed, 4, static_cast<std::uint64_t>(a.n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TimingRow> rows;
  for (int t = 0; t < a.tests; ++t) {
    const Polygon p = generate_convex_polygon(a.n, rng);
    Vec d(a.n);
    for (int j = 0; j < a.n; ++j) d[j] = unit(rng);
    rows.push_back(time_reconstructions(p, d, *db, M, a.delta));
  }
  std::ofstream os = open_out(a.out);
  os.precision(9);
  os << "polygon,M,pi_T_build,pi_T_apply,fe_T_assemble,fe_T_solve,rb_T_assemble,rb_T_solve\n";
  TimingRow mean;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const TimingRow& r = rows[k];
    os << k << ',' << M << ',' << r.pi_build << ',' << r.pi_apply << ',' << r.fe_assemble << ',' << r.fe_solve << ','
       << r.rb_assemble << ',' << r.rb_solve << '\n';
    mean.pi_build += r.pi_build / a.tests;
    mean.pi_apply += r.pi_apply / a.tests;
    mean.fe_assemble += r.fe_assemble / a.tests;
    mean.fe_solve += r.fe_solve / a.tests;
    mean.rb_assemble += r.rb_assemble / a.tests;
    mean.rb_solve += r.rb_solve / a.tests;
  }
  os << "mean," << M << ',' << mean.pi_build << ',' << mean.pi_apply << ',' << mean.fe_assemble << ','
     << mean.fe_solve << ',' << mean.rb_assemble << ',' << mean.rb_solve << '\n';
  std::cout << "mean seconds: pi " << mean.pi_build + mean.pi_apply << " fe " << mean.fe_assemble + mean.fe_solve
            << " rb " << mean.rb_assemble + mean.rb_solve << '\n';
}

struct JumpArgs {
  std::string mesh;
  int cells = 400;
  int lloyd = 100;
  std::string stab = "rb:1";
  std::string modes = "pi,rb:1";
  std::string db;
  std::string fallback = "error";
  int samples = 401;
  std::string out = "jump";
};

void run_demo_jump(const JumpArgs& a, const Common& c) {
  const PolyMesh mesh = a.mesh.empty() ? mesh_for(a.cells, a.lloyd, c.seed) : load_mesh(a.mesh);
  const DatabaseSet dbs = load_dbs_if(a.db);
  const DiffusionProblem prob = make_problem("jump", {});
  const VemSolution sol = assemble_and_solve(mesh, prob, stab_from(a.stab, 1, dbs, a.fallback));
  const fs::path dir(a.out);
  {
    std::ofstream os = open_out(dir / "mesh.txt");
    write_mesh(os, mesh);
    std::ofstream ss = open_out(dir / "solution.txt");
    write_solution(ss, sol.dofs);
  }
  for (const ReconSpec& spec : recon_list(a.modes, dbs)) {
    std::string tag = recon_name(spec);
    std::replace(tag.begin(), tag.end(), ':', '_');
    std::ofstream os = open_out(dir / ("field_" + tag + ".txt"));
    write_field(os, mesh, sol.dofs, spec);
    write_line(dir / ("line_" + tag + ".csv"), line_sample(mesh, sol.dofs, Point(0, 0), Point(1, 1), a.samples, spec));
    const VertexAgreement va = vertex_agreement(mesh, sol.dofs, spec);
    std::cout << recon_name(spec) << " vertex_jump " << va.jump << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lowest-order virtual elements with reduced-basis basis functions"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();  // --seed and --threads may follow the subcommand
  Common common;
  app.add_option("--seed", common.seed, "Seed of every random stream")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads (0: all cores)")->capture_default_str();

  MeshArgs mesh_args;
  auto* mesh = app.add_subcommand("mesh", "Centroidal Voronoi mesh of the unit square");
  mesh->add_option("--cells", mesh_args.cells, "Number of cells")->capture_default_str();
  mesh->add_option("--lloyd", mesh_args.lloyd, "Lloyd iterations")->capture_default_str();
  mesh->add_option("--out", mesh_args.out, "Output mesh file")->capture_default_str();

  DatasetArgs ds_args;
  auto* ds = app.add_subcommand("gen-dataset", "Random convex polygons");
  ds->add_option("--n", ds_args.n, "Vertex count")->capture_default_str();
  ds->add_option("--count", ds_args.count, "Number of polygons")->capture_default_str();
  ds->add_option("--out", ds_args.out, "Output polygon set")->capture_default_str();

  OfflineArgs off_args;
  auto* off = app.add_subcommand("offline", "Build reduced-basis databases");
  off->add_option("--n", off_args.n, "Vertex counts, comma separated")->capture_default_str();
  off->add_option("--train", off_args.train, "Training polygons P")->capture_default_str();
  off->add_option("--mmax", off_args.mmax, "Stored basis size M_max")->capture_default_str();
  off->add_option("--delta", off_args.delta, "Reference mesh size")->capture_default_str();
  off->add_option("--delta-k", off_args.delta_k, "Physical mesh size (independent mode)")->capture_default_str();
  off->add_option("--snapshot-mesh", off_args.snapshot_mesh, "matched | independent")->capture_default_str();
  off->add_option("--out", off_args.out, "Database root directory")->capture_default_str();

  ValidateArgs val_args;
  auto* val = app.add_subcommand("validate", "Reduced basis vs finite elements on test polygons");
  val->add_option("--db", val_args.db, "Database root directory")->capture_default_str();
  val->add_option("--n", val_args.n, "Vertex count")->capture_default_str();
  val->add_option("--tests", val_args.tests, "Test polygons")->capture_default_str();
  val->add_option("--m", val_args.m, "Basis sizes, comma separated (0: projection)")->capture_default_str();
  val->add_option("--out", val_args.out, "Output CSV")->capture_default_str();

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve a diffusion problem with virtual elements");
  solve->add_option("--mesh", solve_args.mesh, "Mesh file")->required();
  add_problem_flags(solve, solve_args.problem);
  solve->add_option("--stab", solve_args.stab, "dofi | drecipe | rb | rb:M")->capture_default_str();
  solve->add_option("--db", solve_args.db, "Database root directory");
  solve->add_option("--m", solve_args.m, "Basis size for --stab rb")->capture_default_str();
  solve->add_option("--fallback", solve_args.fallback, "error | dofi when a database is missing")->capture_default_str();
  solve->add_option("--out", solve_args.out, "Output solution file")->capture_default_str();

  ConvergenceArgs conv_args;
  auto* conv = app.add_subcommand("convergence", "Error and rate tables over a mesh sequence");
  add_problem_flags(conv, conv_args.problem);
  conv->add_option("--stabs", conv_args.stabs, "Stabilizations, comma separated")->capture_default_str();
  conv->add_option("--modes", conv_args.modes, "Reconstructions: pi, rb:M, fe[:delta]")->capture_default_str();
  conv->add_option("--cells", conv_args.cells, "Cell counts, comma separated")->capture_default_str();
  conv->add_option("--lloyd", conv_args.lloyd, "Lloyd iterations")->capture_default_str();
  conv->add_option("--db", conv_args.db, "Database root directory");
  conv->add_option("--fallback", conv_args.fallback, "error | dofi when a database is missing")->capture_default_str();
  conv->add_flag("--condition", conv_args.condition, "Also estimate condition numbers");
  conv->add_option("--out", conv_args.out, "Output directory")->capture_default_str();

  ReconstructArgs rec_args;
  auto* rec = app.add_subcommand("reconstruct", "Evaluate a reconstruction of a solution");
  rec->add_option("--mesh", rec_args.mesh, "Mesh file")->required();
  rec->add_option("--solution", rec_args.solution, "Solution file")->required();
  rec->add_option("--mode", rec_args.mode, "pi | rb:M | fe[:delta]")->capture_default_str();
  rec->add_option("--db", rec_args.db, "Database root directory");
  rec->add_option("--field", rec_args.field, "Field export file");
  rec->add_option("--line", rec_args.line, "Segment x0,y0,x1,y1 to sample");
  rec->add_option("--samples", rec_args.samples, "Samples along the segment")->capture_default_str();
  rec->add_option("--line-out", rec_args.line_out, "Line CSV")->capture_default_str();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time the projection, FE and RB reconstructions");
  bench->add_option("--db", bench_args.db, "Database root directory")->capture_default_str();
  bench->add_option("--n", bench_args.n, "Vertex count")->capture_default_str();
  bench->add_option("--tests", bench_args.tests, "Test polygons")->capture_default_str();
  bench->add_option("--m", bench_args.m, "Basis size")->capture_default_str();
  bench->add_option("--delta", bench_args.delta, "FE mesh size")->capture_default_str();
  bench->add_option("--out", bench_args.out, "Output CSV")->capture_default_str();

  JumpArgs jump_args;
  auto* jump = app.add_subcommand("demo-jump", "Discontinuous boundary data: reconstructions along the diagonal");
  jump->add_option("--mesh", jump_args.mesh, "Mesh file (default: generate)");
  jump->add_option("--cells", jump_args.cells, "Cells of the generated mesh")->capture_default_str();
  jump->add_option("--lloyd", jump_args.lloyd, "Lloyd iterations")->capture_default_str();
  jump->add_option("--stab", jump_args.stab, "Stabilization")->capture_default_str();
  jump->add_option("--modes", jump_args.modes, "Reconstructions, comma separated")->capture_default_str();
  jump->add_option("--db", jump_args.db, "Database root directory");
  jump->add_option("--fallback", jump_args.fallback, "error | dofi when a database is missing")->capture_default_str();
  jump->add_option("--samples", jump_args.samples, "Samples along the diagonal")->capture_default_str();
  jump->add_option("--out", jump_args.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    set_num_threads(common.threads);
    if (mesh->parsed()) {
      echo_config(*mesh, common, dir_of(mesh_args.out));
      run_mesh(mesh_args, common);
    } else if (ds->parsed()) {
      echo_config(*ds, common, dir_of(ds_args.out));
      run_gen_dataset(ds_args, common);
    } else if (off->parsed()) {
      echo_config(*off, common, off_args.out);
      run_offline(off_args, common);
    } else if (val->parsed()) {
      echo_config(*val, common, dir_of(val_args.out));
      run_validate(val_args, common);
    } else if (solve->parsed()) {
      echo_config(*solve, common, dir_of(solve_args.out));
      run_solve(solve_args, common);
    } else if (conv->parsed()) {
      echo_config(*conv, common, conv_args.out);
      run_convergence(conv_args, common);
    } else if (rec->parsed()) {
      echo_config(*rec, common, dir_of(rec_args.field.empty() ? rec_args.line_out : rec_args.field));
      run_reconstruct(rec_args, common);
    } else if (bench->parsed()) {
      echo_config(*bench, common, dir_of(bench_args.out));
      run_bench(bench_args, common);
    } else if (jump->parsed()) {
      echo_config(*jump, common, jump_args.out);
      run_demo_jump(jump_args, common);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return kInternalExit;
  }
  return 0;
}
