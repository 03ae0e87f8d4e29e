#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "vemrb/rb_offline.hpp"

namespace vemrb {

// Directory layout: manifest.txt (`RBDB v1`, scalars, one `array` line per
// binary file with its shape and FNV-1a checksum) plus <name>.bin files of
// little-endian doubles in row-major order.
void save_db(const RBDatabase& db, const std::filesystem::path& dir);

/// Loads a database; m >= 0 keeps only the first m basis members (and the
/// matching brick slices).
RBDatabase load_db(const std::filesystem::path& dir, int m = -1);

/// Returns a copy restricted to the first m basis members.
RBDatabase truncate_db(const RBDatabase& db, int m);

/// `<root>/n<N>`.
std::filesystem::path db_dir(const std::filesystem::path& root, int n);

std::uint64_t fnv1a(const void* data, std::size_t bytes);

/// Databases keyed by vertex count.
class DatabaseSet {
 public:
  void add(std::shared_ptr<const RBDatabase> db);
  const RBDatabase* get(int n) const;
  std::vector<int> sizes() const;
  bool empty() const { return dbs_.empty(); }

  /// Loads every `n<N>` subdirectory of root.
  static DatabaseSet load(const std::filesystem::path& root);

 private:
  std::map<int, std::shared_ptr<const RBDatabase>> dbs_;
};

}  // namespace vemrb
