#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "flaremap/flare.hpp"
#include "flaremap/panel.hpp"

namespace flaremap {

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path outcomes;  // optional
  std::filesystem::path out;
  std::filesystem::path cache_dir;  // optional matrix cache
  std::filesystem::path entity_filter;  // optional: restrict regressions to listed entities
  CsvSchema schema{};

  int window = 5;
  Rescale rescale = Rescale::Log;
  MetricKind metric = MetricKind::Cosine;
  std::optional<double> lambda;  // Mahalanobis regularization
  int filter_dims = 2;
  int cubes = 20;
  double overlap = 0.5;
  int bins = 10;
  int baseline_k = 0;  // 0 skips the global clustering baselines
  std::uint64_t seed = 1;
  int max_iter = 300;
  unsigned threads = 0;

  /// Throws ValidationError describing the first bad parameter.
  void validate() const;

  /// Semantic parameters as sorted `key=value` lines. Output location, cache
  /// and thread count are excluded.
  std::string canonical() const;
  std::uint64_t hash() const;
  nlohmann::json to_json() const;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunManifest {
  std::string status;  // "complete" or "incomplete"
  std::string failed_stage;
  std::string error;
  nlohmann::json json;
};

/// ingest -> window -> rescale -> matrix -> filter -> mapper -> census ->
/// baselines (if baseline_k > 0) -> regressions (if outcomes given). Writes
/// every artifact plus manifest.json into cfg.out, which must not already hold
/// a run. On failure the manifest is still written, marked incomplete, and the
/// error is rethrown.
RunManifest run_pipeline(const RunConfig& cfg);

struct LengthChange {
  std::string entity;
  std::string before;
  std::string after;
};

struct RunComparison {
  std::vector<LengthChange> changed;
  std::vector<std::string> only_in_a;
  std::vector<std::string> only_in_b;
  nlohmann::json graph_a;
  nlohmann::json graph_b;
  std::vector<std::string> warnings;
  bool config_equal = false;

  bool empty() const;
  nlohmann::json to_json() const;
};

/// Diff of two complete run directories: per-entity flare lengths and graph
/// summaries (nodes, edges, components, cycle rank).
RunComparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace flaremap
