// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vemrb/error.hpp"
#include "vemrb/parallel.hpp"
#include "vemrb/polymesh.hpp"
#include "vemrb/postprocess.hpp"
#include "vemrb/problems.hpp"
#include "vemrb/rb_database_io.hpp"
#include "vemrb/rb_offline.hpp"
#include "vemrb/rb_online.hpp"
#include "vemrb/vem.hpp"

using namespace vemrb;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id = 0;
  std::string name;
  double budget = 0.0;  // seconds, 0 = none
  std::function<Outcome()> run;
};

Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(extra)};
  return Rng(seq);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

const std::vector<int> kMeshCells = {100, 400, 1600, 6400};

struct Shared {
  DatabaseSet dbs;
  std::vector<PolyMesh> meshes;
  // kappa[problem][stab] per mesh
  std::map<std::string, std::map<std::string, std::vector<double>>> kappa;
};

Shared& shared() {
  static Shared s;
  return s;
}

const std::vector<PolyMesh>& convergence_meshes() {
  auto& m = shared().meshes;
  if (m.empty()) {
    for (int cells : kMeshCells) {
      Rng rng = make_rng(5, 1, static_cast<std::uint64_t>(cells));
      m.push_back(voronoi_mesh(cells, 100, rng).mesh);
    }
  }
  return m;
}

StabConfig rb_stab(int M) {
  StabConfig s = parse_stab("rb:" + std::to_string(M));
  s.dbs = &shared().dbs;
  return s;
}

ReconSpec recon(const std::string& text) {
  ReconSpec r = parse_recon(text);
  r.dbs = &shared().dbs;
  return r;
}

SolveHook kappa_hook(const std::string& problem) {
  return [problem](const PolyMesh&, const StabConfig& s, const VemSolution& sol) {
    shared().kappa[problem][stab_name(s)].push_back(condition_estimate(sol.interior_matrix, sol.symmetric).kappa);
  };
}

const ConvergenceRecord* find(const std::vector<ConvergenceRecord>& recs, const std::string& stab,
                              const std::string& mode, std::size_t mesh) {
  std::size_t k = 0;
  for (const auto& r : recs) {
    if (r.stab == stab && r.mode == mode && k++ == mesh) return &r;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

Outcome patch_test() {
  OfflineOptions o;
  o.P = 40;
  o.m_max = 20;
  o.delta = 0.02;
  o.seed = 1;
  for (int n = 4; n <= 12; ++n) shared().dbs.add(std::make_shared<RBDatabase>(build_database(n, o).db));

  Rng rng = make_rng(1, 1, 100);
  const PolyMesh mesh = voronoi_mesh(100, 100, rng).mesh;
  const DiffusionProblem prob = make_problem("patch");
  Outcome out{true, ""};
  for (const StabConfig& s : {parse_stab("dofi"), parse_stab("drecipe"), rb_stab(1)}) {
    const VemSolution sol = assemble_and_solve(mesh, prob, s);
    double err = 0.0;
    for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v) {
      err = std::max(err, std::abs(sol.dofs[v] - prob.exact->value(mesh.vertices[static_cast<std::size_t>(v)])));
    }
    out.pass = out.pass && err <= 1e-9;
    out.detail += stab_name(s) + " max dof error " + fmt(err) + "; ";
  }
  return out;
}

Outcome snapshot_oracle() {
  const Polygon sq = Polygon::from_vertices({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
  std::vector<double> lx, ly;
  std::string detail;
  for (double delta : {0.1, 0.05, 0.025}) {
    const TriMesh m = triangulate(sq, delta);
    const Vec u = vem_basis_fe(m, 0);
    // nodal values are exact on this lattice, so the sup is taken on edge midpoints too
    double err = 0.0;
    for (const auto& tri : m.triangles) {
      for (int a = 0; a < 3; ++a) {
        const int i = tri[a], j = tri[(a + 1) % 3];
        const Point x = 0.5 * (m.nodes[i] + m.nodes[j]);
        const double uh = 0.5 * (u[i] + u[j]);
        err = std::max({err, std::abs(uh - (1 - x.x()) * (1 - x.y())),
                        std::abs(u[i] - (1 - m.nodes[i].x()) * (1 - m.nodes[i].y()))});
      }
    }
    lx.push_back(std::log(delta));
    ly.push_back(std::log(err));
    detail += "delta " + fmt(delta) + " err " + fmt(err) + "; ";
  }
  const double slope = oracle::fit_slope(lx, ly);
  return {std::abs(slope - 2.0) <= 0.3, detail + "slope " + fmt(slope)};
}

Outcome validation_statistics() {
  OfflineOptions o;
  o.P = 100;
  o.m_max = 20;
  o.delta = 0.02;
  o.seed = 7;
  const RBDatabase db = build_database(6, o).db;
  const std::vector<int> Ms = {0, 1, 2, 5, 10};
  const int tests = 200;
  Rng rng = make_rng(11, 3, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Polygon> polys;
  std::vector<Vec> dofs;
  for (int t = 0; t < tests; ++t) {
    polys.push_back(generate_convex_polygon(6, rng));
    Vec d(6);
    for (int j = 0; j < 6; ++j) d[j] = unit(rng);
    dofs.push_back(d);
  }
  std::vector<std::vector<double>> errs(static_cast<std::size_t>(tests));
  parallel_for(tests, [&](int t) {
    errs[static_cast<std::size_t>(t)] =
        validation_errors(polys[static_cast<std::size_t>(t)], dofs[static_cast<std::size_t>(t)], db, Ms);
  });
  std::vector<double> med;
  std::string detail = "medians";
  for (std::size_t k = 0; k < Ms.size(); ++k) {
    std::vector<double> v;
    for (const auto& e : errs) v.push_back(e[k]);
    med.push_back(median(v));
    detail += " M=" + std::to_string(Ms[k]) + ":" + fmt(med.back());
  }
  bool pass = true;
  for (std::size_t k = 1; k < med.size(); ++k) pass = pass && med[k] < med[k - 1];
  return {pass, detail};
}

Outcome affine_exactness() {
  const Mat2 kk = kTensorK2;
  double worst = 0.0;
  int compared = 0;
  for (int n : {4, 6, 9}) {
    const RBDatabase& db = *shared().dbs.get(n);
    const TriMesh& m = db.ref_mesh;
    const int M = db.m_max;
    Rng rng = make_rng(13, 5, static_cast<std::uint64_t>(n));
    for (int t = 0; t < 20; ++t) {
      const Polygon p = generate_convex_polygon(n, rng);
      const RBBasisEval e = reduced_solve(p, db, M);
      const auto c = laplace_coefficients(e.map);
      const SpMat s = oracle::stiffness(m, [&](int tri) {
        return oracle::pulled_back_tensor(e.polygon, m.fan_of_triangle[static_cast<std::size_t>(tri)], Mat2::Identity());
      });
      for (int j = 0; j < n; ++j) {
        Mat a;
        Vec f;
        reduced_system(db, c, j, M, a, f);
        const Mat xi = db.basis[static_cast<std::size_t>(j)].leftCols(M);
        const Mat a_direct = xi.transpose() * s * xi;
        const Vec f_direct = -(xi.transpose() * (s * db.liftings[static_cast<std::size_t>(j)]));
        const double scale = std::max({1.0, a_direct.cwiseAbs().maxCoeff(), f_direct.cwiseAbs().maxCoeff()});
        worst = std::max(worst, (a - a_direct).cwiseAbs().maxCoeff() / scale);
        worst = std::max(worst, (f - f_direct).cwiseAbs().maxCoeff() / scale);
        ++compared;
      }
      const TriMesh phys = pulled_back_mesh(e, p);
      Mat basis(phys.num_nodes(), n);
      for (int j = 0; j < n; ++j) basis.col(j) = reconstruct_on_reference(e, j);
      for (const Mat2& k : {Mat2(Mat2::Identity()), kk}) {
        const Mat direct = basis.transpose() * (oracle::stiffness(phys, k) * basis);
        const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
        worst = std::max(worst, (rb_energy_matrix(e, k) - direct).cwiseAbs().maxCoeff() / scale);
        ++compared;
      }
    }
  }
  return {worst <= 1e-10, std::to_string(compared) + " matrices, worst scaled entry gap " + fmt(worst)};
}

Outcome training_reproduction() {
  OfflineOptions o;
  o.P = 20;
  o.m_max = 20;
  o.delta = 0.02;
  o.seed = 9;
  const OfflineResult res = build_database(6, o);
  const RBDatabase& db = res.db;
  const Vec& ev = db.eigenvalues;
  const int rank = static_cast<int>((ev.array() > 1e-12 * ev[0]).count());
  const std::vector<int> inner = interior_nodes(db.ref_mesh);
  const auto ni = static_cast<Eigen::Index>(inner.size());
  double worst = 0.0;
  const auto np = static_cast<int>(res.snapshots.polygons.size());
  for (int p = 0; p < np; ++p) {
    const Polygon& poly = res.snapshots.polygons[static_cast<std::size_t>(p)];
    const RBBasisEval e = reduced_solve(poly, db, rank);
    const TriMesh phys = pulled_back_mesh(e, poly);
    for (int j = 0; j < 6; ++j) {
      Vec stored = db.liftings[static_cast<std::size_t>(j)];
      for (Eigen::Index k = 0; k < ni; ++k) stored[inner[static_cast<std::size_t>(k)]] += res.snapshots.columns(j * ni + k, p);
      worst = std::max(worst, field_norms(phys, reconstruct_on_reference(e, j) - stored).h1());
    }
  }
  return {worst <= 1e-8, "rank " + std::to_string(rank) + ", " + std::to_string(np) +
                             " training polygons, worst H1 gap " + fmt(worst)};
}

Outcome test1_convergence() {
  ProblemParams pp;
  pp.nu = 20;
  const auto recs = convergence_study(convergence_meshes(), make_problem("test1", pp), {parse_stab("dofi"), rb_stab(1)},
                                      {recon("pi")}, kappa_hook("test1"));
  bool pass = true;
  std::string detail;
  for (std::size_t k = 2; k < 4; ++k) {
    const double rb = find(recs, "rb:1", "pi", k)->err.err1;
    const double dofi = find(recs, "dofi", "pi", k)->err.err1;
    pass = pass && rb <= dofi;
    detail += "mesh " + std::to_string(kMeshCells[k]) + " Err1 rb " + fmt(rb) + " dofi " + fmt(dofi) + "; ";
  }
  const auto rate = find(recs, "rb:1", "pi", 3)->rate1;
  pass = pass && rate && *rate >= 0.7;
  return {pass, detail + "final rb rate1 " + fmt(rate ? *rate : NAN)};
}

Outcome test2_convergence() {
  ProblemParams pp;
  pp.nu1 = 20;
  pp.nu2 = 8;
  const auto recs = convergence_study(convergence_meshes(), make_problem("test2", pp), {parse_stab("dofi"), rb_stab(1)},
                                      {recon("pi")}, kappa_hook("test2"));
  const double rb = find(recs, "rb:1", "pi", 3)->err.err1;
  const double dofi = find(recs, "dofi", "pi", 3)->err.err1;
  bool pass = rb <= dofi;
  std::string detail = "finest Err1 rb " + fmt(rb) + " dofi " + fmt(dofi) + "; ErrE ratio";
  for (std::size_t k = 0; k < 2; ++k) {
    const double a = find(recs, "rb:1", "pi", k)->err.errE;
    const double b = find(recs, "dofi", "pi", k)->err.errE;
    const double ratio = std::max(a, b) / std::min(a, b);
    pass = pass && ratio <= 1.2;
    detail += " " + fmt(ratio);
  }
  return {pass, detail};
}

Outcome postprocess_convergence() {
  const auto& meshes = convergence_meshes();
  const DiffusionProblem prob = make_problem("poisson");
  const auto recs = convergence_study(meshes, prob, {rb_stab(1)}, {recon("rb:1"), recon("fe:0.02")},
                                      kappa_hook("poisson"));
  for (const PolyMesh& m : meshes) {
    const VemSolution sol = assemble_and_solve(m, prob, parse_stab("dofi"));
    shared().kappa["poisson"]["dofi"].push_back(condition_estimate(sol.interior_matrix, sol.symmetric).kappa);
  }
  double gap = 0.0;
  for (std::size_t k = 1; k < meshes.size(); ++k) {
    const ConvergenceRecord* rb = find(recs, "rb:1", "rb:1", k);
    const ConvergenceRecord* fe = find(recs, "rb:1", "fe:0.02", k);
    gap = std::max({gap, std::abs(*rb->rate0 - *fe->rate0), std::abs(*rb->rate1 - *fe->rate1),
                    std::abs(*rb->rateInf - *fe->rateInf)});
  }
  double jump = 0.0;
  for (const PolyMesh& m : meshes) {
    const VemSolution sol = assemble_and_solve(m, prob, rb_stab(1));
    const VertexAgreement va = vertex_agreement(m, sol.dofs, recon("rb:1"));
    jump = std::max({jump, va.jump, va.dof_gap});
  }
  return {gap <= 0.15 && jump <= 1e-9, "max rate gap " + fmt(gap) + ", vertex agreement " + fmt(jump)};
}

Outcome timing_ordering() {
  OfflineOptions o;
  o.P = 100;
  o.m_max = 60;
  o.delta = 0.01;
  o.seed = 7;
  const RBDatabase db = build_database(6, o).db;
  const int M = std::min(60, db.m_max);
  Rng rng = make_rng(11, 4, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double pi = 0.0, fe = 0.0, rb = 0.0;
  const int tests = 100;
  for (int t = 0; t < tests; ++t) {
    const Polygon p = generate_convex_polygon(6, rng);
    Vec d(6);
    for (int j = 0; j < 6; ++j) d[j] = unit(rng);
    const TimingRow r = time_reconstructions(p, d, db, M, 0.01);
    pi += (r.pi_build + r.pi_apply) / tests;
    fe += (r.fe_assemble + r.fe_solve) / tests;
    rb += (r.rb_assemble + r.rb_solve) / tests;
  }
  const double vs_pi = rb / pi;
  const bool pass = 10.0 * rb <= fe && vs_pi >= 0.1 && vs_pi <= 10.0;
  return {pass, "M=" + std::to_string(M) + " mean ms: pi " + fmt(1e3 * pi) + " fe " + fmt(1e3 * fe) + " rb " +
                    fmt(1e3 * rb) + " (fe/rb " + fmt(fe / rb) + ", rb/pi " + fmt(vs_pi) + ")"};
}

Outcome condition_numbers() {
  std::vector<double> lh;
  for (const PolyMesh& m : convergence_meshes()) lh.push_back(std::log(m.h));
  bool pass = true;
  std::string detail;
  for (const char* prob : {"poisson", "test1", "test2"}) {
    const auto& k = shared().kappa[prob];
    if (!k.contains("dofi") || !k.contains("rb:1") || k.at("dofi").size() != lh.size() ||
        k.at("rb:1").size() != lh.size()) {
      return {false, std::string("missing condition numbers for ") + prob};
    }
    detail += std::string(prob) + ":";
    for (const char* stab : {"dofi", "rb:1"}) {
      std::vector<double> lk;
      for (double v : k.at(stab)) lk.push_back(std::log(v));
      const double slope = oracle::fit_slope(lh, lk);
      pass = pass && slope >= -2.4 && slope <= -1.6;
      detail += std::string(" ") + stab + " exponent " + fmt(slope);
    }
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < lh.size(); ++i) {
      const double r = k.at("rb:1")[i] / k.at("dofi")[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    pass = pass && lo >= 0.1 && hi <= 10.0;
    detail += " ratio [" + fmt(lo) + ", " + fmt(hi) + "]; ";
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "patch test", 30, patch_test},
      {2, "snapshot oracle", 10, snapshot_oracle},
      {3, "validation statistics", 600, validation_statistics},
      {4, "affine-decomposition exactness", 120, affine_exactness},
      {5, "training reproduction", 60, training_reproduction},
      {6, "test 1 convergence", 1200, test1_convergence},
      {7, "test 2 convergence", 1200, test2_convergence},
      {8, "post-processing convergence", 900, postprocess_convergence},
      {9, "timing ordering", 0, timing_ordering},
      {10, "condition numbers", 0, condition_numbers},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.budget > 0 && secs > c.budget) {
      o.pass = false;
      o.detail += " over budget " + fmt(c.budget) + " s;";
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
