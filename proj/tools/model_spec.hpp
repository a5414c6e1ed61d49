#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrfattn/marginal_attention.hpp"
#include "mrfattn/mechanisms.hpp"
#include "mrfattn/mrf.hpp"
#include "mrfattn/pcn.hpp"

namespace mrfattn::cli {

/// Flat "key = value" file. '#' starts a comment; blank lines are skipped.
/// Relative file references resolve against the file's own directory.
class KeyValueFile {
 public:
  static KeyValueFile load(const std::string& path);
  static KeyValueFile parse(const std::string& text, std::filesystem::path base_dir);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  std::vector<long> get_int_list(const std::string& key) const;
  /// Reads the CSV named by `key`.
  Mat matrix(const std::string& key) const;
  std::optional<Mat> optional_matrix(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
  bool header_ = false;
};

/// A model description: the MRF plus the value map used for attention outputs.
struct ModelSpec {
  PairwiseMRF mrf;
  ValueSpec values;
};

/// Builds a model from a description with `prior = cross | self | slot |
/// block-slot | custom`. See docs/model-files.md for the keys.
ModelSpec load_model(const KeyValueFile& kv);

struct PcnSpec {
  PcnNetwork net;
  LayerValues init;
};

/// `layers`, `mode`, `beta`, `weights.<l>`, `precisions.<l>` or `precision`,
/// optional `mask.<l>` and `init.<l>`. Missing initial values are seeded normals.
PcnSpec load_pcn(const KeyValueFile& kv, std::uint64_t seed);

BlockSlotConfig load_block_slot(const KeyValueFile& kv, std::uint64_t seed);

}  // namespace mrfattn::cli
