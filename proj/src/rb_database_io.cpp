#include "vemrb/rb_database_io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "vemrb/error.hpp"

namespace vemrb {

std::uint64_t fnv1a(const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::filesystem::path db_dir(const std::filesystem::path& root, int n) { return root / ("n" + std::to_string(n)); }

namespace {

struct ArrayInfo {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t checksum = 0;
};

std::vector<unsigned char> to_bytes(const std::vector<double>& v) {
  std::vector<unsigned char> out(v.size() * sizeof(double));
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return out;
}

std::vector<double> from_bytes(const std::vector<unsigned char>& in) {
  std::vector<double> out(in.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(in[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

void write_array(const std::filesystem::path& dir, std::ostream& manifest, const std::string& name,
                 const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  const auto bytes = to_bytes(data);
  std::ofstream os(dir / (name + ".bin"), std::ios::binary);
  if (!os) fail(ErrorCode::kIoError, "cannot write " + (dir / (name + ".bin")).string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(bytes.data(), bytes.size()));
  manifest << "array " << name << ' ' << rows << ' ' << cols << ' ' << buf << '\n';
}

std::vector<double> read_array(const std::filesystem::path& dir, const std::string& name, const ArrayInfo& info) {
  const auto path = dir / (name + ".bin");
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kLoadError, "missing array file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() != info.rows * info.cols * 8) {
    fail(ErrorCode::kLoadError, "array " + name + " has " + std::to_string(bytes.size()) + " bytes, manifest expects " +
                                    std::to_string(info.rows * info.cols * 8));
  }
  if (fnv1a(bytes.data(), bytes.size()) != info.checksum) fail(ErrorCode::kLoadError, "checksum mismatch in " + name);
  return from_bytes(bytes);
}

}  // namespace

void save_db(const RBDatabase& db, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string());
  std::ostringstream man;
  man << "RBDB v1\n";
  man << "n " << db.n << "\nP " << db.P << "\nm_max " << db.m_max << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", db.delta);
  man << "delta " << buf << "\nlevel " << db.ref_mesh.level << "\nseed " << db.seed << '\n';
  man << "scalar_product " << db.scalar_product << "\nsnapshot_mesh " << db.snapshot_mesh << '\n';

  const TriMesh& mesh = db.ref_mesh;
  const auto nn = static_cast<std::size_t>(mesh.num_nodes());
  std::vector<double> v;
  v.reserve(nn * 2);
  for (const Point& x : mesh.nodes) {
    v.push_back(x.x());
    v.push_back(x.y());
  }
  write_array(dir, man, "nodes", v, nn, 2);
  v.clear();
  for (const auto& t : mesh.triangles) v.insert(v.end(), {double(t[0]), double(t[1]), double(t[2])});
  write_array(dir, man, "triangles", v, mesh.triangles.size(), 3);
  v.clear();
  for (const Vec& l : db.liftings) v.insert(v.end(), l.data(), l.data() + l.size());
  write_array(dir, man, "liftings", v, static_cast<std::size_t>(db.n), nn);
  v.clear();
  for (const Mat& b : db.basis) {
    for (int l = 0; l < db.m_max; ++l) {
      for (std::size_t k = 0; k < nn; ++k) v.push_back(b(static_cast<Eigen::Index>(k), l));
    }
  }
  write_array(dir, man, "basis", v, static_cast<std::size_t>(db.n) * db.m_max, nn);
  v.assign(db.eigenvalues.data(), db.eigenvalues.data() + db.eigenvalues.size());
  write_array(dir, man, "eigenvalues", v, static_cast<std::size_t>(db.eigenvalues.size()), 1);
  const std::size_t blocks = static_cast<std::size_t>(db.n) * 4 * db.n * db.n;
  write_array(dir, man, "bricks_A", db.A, blocks, static_cast<std::size_t>(db.m_max) * db.m_max);
  write_array(dir, man, "bricks_F", db.F, blocks, static_cast<std::size_t>(db.m_max));
  write_array(dir, man, "bricks_G", db.G, blocks, 1);

  std::ofstream os(dir / "manifest.txt");
  if (!os) fail(ErrorCode::kIoError, "cannot write manifest in " + dir.string());
  os << man.str();
}

RBDatabase truncate_db(const RBDatabase& db, int m) {
  if (m < 0 || m > db.m_max) fail(ErrorCode::kInvalidArgument, "requested M exceeds the database M_max");
  if (m == db.m_max) return db;
  RBDatabase out;
  out.n = db.n;
  out.P = db.P;
  out.m_max = m;
  out.delta = db.delta;
  out.seed = db.seed;
  out.scalar_product = db.scalar_product;
  out.snapshot_mesh = db.snapshot_mesh;
  out.ref_mesh = db.ref_mesh;
  out.liftings = db.liftings;
  for (const Mat& b : db.basis) out.basis.push_back(b.leftCols(m));
  out.eigenvalues = db.eigenvalues;
  out.G = db.G;
  const int n = db.n;
  out.A.resize(static_cast<std::size_t>(n) * 4 * n * n * m * m);
  out.F.resize(static_cast<std::size_t>(n) * 4 * n * n * m);
  for (int i = 0; i < n; ++i) {
    for (int nu = 1; nu <= 4; ++nu) {
      for (int j = 0; j < n; ++j) {
        for (int jp = 0; jp < n; ++jp) {
          for (int l = 0; l < m; ++l) {
            out.F[out.f_block(i, nu, j, jp) + static_cast<std::size_t>(l)] = db.f(i, nu, j, jp, l);
            for (int lp = 0; lp < m; ++lp) {
              out.A[out.a_block(i, nu, j, jp) + static_cast<std::size_t>(l) * m + lp] = db.a(i, nu, j, jp, l, lp);
            }
          }
        }
      }
    }
  }
  return out;
}

RBDatabase load_db(const std::filesystem::path& dir, int m) {
  std::ifstream is(dir / "manifest.txt");
  if (!is) fail(ErrorCode::kDbNotFound, "no database manifest in " + dir.string());
  std::string line;
  if (!std::getline(is, line) || line != "RBDB v1") fail(ErrorCode::kLoadError, "unsupported database version");
  RBDatabase db;
  int level = -1;
  std::map<std::string, ArrayInfo> arrays;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    bool ok = true;
    if (key == "n") ok = static_cast<bool>(ss >> db.n);
    else if (key == "P") ok = static_cast<bool>(ss >> db.P);
    else if (key == "m_max") ok = static_cast<bool>(ss >> db.m_max);
    else if (key == "delta") ok = static_cast<bool>(ss >> db.delta);
    else if (key == "level") ok = static_cast<bool>(ss >> level);
    else if (key == "seed") ok = static_cast<bool>(ss >> db.seed);
    else if (key == "scalar_product") ok = static_cast<bool>(ss >> db.scalar_product);
    else if (key == "snapshot_mesh") ok = static_cast<bool>(ss >> db.snapshot_mesh);
    else if (key == "array") {
      std::string name, hex;
      ArrayInfo info;
      ok = static_cast<bool>(ss >> name >> info.rows >> info.cols >> hex);
      if (ok) {
        try {
          info.checksum = std::stoull(hex, nullptr, 16);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      arrays[name] = info;
    } else {
      fail(ErrorCode::kLoadError, "unknown manifest key " + key);
    }
    if (!ok) fail(ErrorCode::kLoadError, "malformed manifest line: " + line);
  }
  if (db.n < 3 || db.m_max < 1 || db.P < db.m_max || level < 0) fail(ErrorCode::kLoadError, "inconsistent manifest");
  auto info = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto it = arrays.find(name);
    if (it == arrays.end()) fail(ErrorCode::kLoadError, "manifest lacks array " + name);
    if (it->second.rows != rows || it->second.cols != cols) fail(ErrorCode::kLoadError, "array " + name + " has wrong shape");
    return it->second;
  };
  db.ref_mesh = triangulate_level(reference_polygon(db.n), level);
  const auto nn = static_cast<std::size_t>(db.ref_mesh.num_nodes());
  const auto nodes = read_array(dir, "nodes", info("nodes", nn, 2));
  for (std::size_t k = 0; k < nn; ++k) {
    if ((Point(nodes[2 * k], nodes[2 * k + 1]) - db.ref_mesh.nodes[k]).norm() > 1e-13) {
      fail(ErrorCode::kLoadError, "stored reference mesh does not match its level");
    }
  }
  const auto tris = read_array(dir, "triangles", info("triangles", db.ref_mesh.triangles.size(), 3));
  for (std::size_t t = 0; t < db.ref_mesh.triangles.size(); ++t) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (tris[3 * t + k] != db.ref_mesh.triangles[t][k]) fail(ErrorCode::kLoadError, "stored connectivity mismatch");
    }
  }
  const auto lift = read_array(dir, "liftings", info("liftings", static_cast<std::size_t>(db.n), nn));
  for (int j = 0; j < db.n; ++j) {
    db.liftings.push_back(Eigen::Map<const Vec>(lift.data() + static_cast<std::size_t>(j) * nn, static_cast<Eigen::Index>(nn)));
  }
  const auto basis = read_array(dir, "basis", info("basis", static_cast<std::size_t>(db.n) * db.m_max, nn));
  for (int j = 0; j < db.n; ++j) {
    Mat b(static_cast<Eigen::Index>(nn), db.m_max);
    for (int l = 0; l < db.m_max; ++l) {
      const double* src = basis.data() + (static_cast<std::size_t>(j) * db.m_max + l) * nn;
      b.col(l) = Eigen::Map<const Vec>(src, static_cast<Eigen::Index>(nn));
    }
    db.basis.push_back(std::move(b));
  }
  const auto ev = read_array(dir, "eigenvalues", info("eigenvalues", static_cast<std::size_t>(db.P), 1));
  db.eigenvalues = Eigen::Map<const Vec>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  const std::size_t blocks = static_cast<std::size_t>(db.n) * 4 * db.n * db.n;
  db.A = read_array(dir, "bricks_A", info("bricks_A", blocks, static_cast<std::size_t>(db.m_max) * db.m_max));
  db.F = read_array(dir, "bricks_F", info("bricks_F", blocks, static_cast<std::size_t>(db.m_max)));
  db.G = read_array(dir, "bricks_G", info("bricks_G", blocks, 1));
  if (m >= 0 && m < db.m_max) return truncate_db(db, m);
  if (m > db.m_max) fail(ErrorCode::kInvalidArgument, "requested M exceeds the database M_max");
  return db;
}

void DatabaseSet::add(std::shared_ptr<const RBDatabase> db) { dbs_[db->n] = std::move(db); }

const RBDatabase* DatabaseSet::get(int n) const {
  auto it = dbs_.find(n);
  return it == dbs_.end() ? nullptr : it->second.get();
}

std::vector<int> DatabaseSet::sizes() const {
  std::vector<int> out;
  for (const auto& [n, db] : dbs_) out.push_back(n);
  return out;
}

DatabaseSet DatabaseSet::load(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) fail(ErrorCode::kDbNotFound, "database directory not found: " + root.string());
  DatabaseSet set;
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.size() > 1 && name[0] == 'n' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) set.add(std::make_shared<const RBDatabase>(load_db(d)));
  if (set.empty()) fail(ErrorCode::kDbNotFound, "no n<N> database under " + root.string());
  return set;
}

}  // namespace vemrb
