#include "flaremap/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "flaremap/baselines.hpp"
#include "flaremap/csv.hpp"
#include "flaremap/error.hpp"
#include "flaremap/graph_export.hpp"
#include "flaremap/kernels.hpp"
#include "flaremap/mapper.hpp"
#include "flaremap/regression.hpp"

namespace flaremap {

namespace fs = std::filesystem;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  body(out);
  if (!out) throw ValidationError("failed writing " + path.string());
}

std::string fixed(double x, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

}  // namespace

void RunConfig::validate() const {
  if (input.empty()) throw ValidationError("--input is required");
  if (out.empty()) throw ValidationError("--out is required");
  if (window < 1) throw ValidationError("window must be >= 1");
  if (filter_dims < 1) throw ValidationError("filter-dims must be >= 1");
  CoverSpec{cubes, overlap}.validate();
  if (bins < 2) throw ValidationError("bins must be >= 2");
  if (baseline_k < 0) throw ValidationError("baseline-k must be >= 0");
  if (max_iter < 1) throw ValidationError("max-iter must be >= 1");
  if (lambda && !(*lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (lambda && metric != MetricKind::Mahalanobis) throw ValidationError("lambda only applies to the mahalanobis metric");
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"baseline_k", std::to_string(baseline_k)},
      {"bins", std::to_string(bins)},
      {"col_category", schema.category},
      {"col_count", schema.count},
      {"col_entity", schema.entity},
      {"col_period", schema.period},
      {"cubes", std::to_string(cubes)},
      {"entity_filter", entity_filter.generic_string()},
      {"filter_dims", std::to_string(filter_dims)},
      {"input", input.generic_string()},
      {"lambda", lambda ? fmt_double(*lambda) : "auto"},
      {"max_iter", std::to_string(max_iter)},
      {"metric", to_string(metric)},
      {"outcomes", outcomes.generic_string()},
      {"overlap", fmt_double(overlap)},
      {"rescale", to_string(rescale)},
      {"seed", std::to_string(seed)},
      {"window", std::to_string(window)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["input"] = input.generic_string();
  j["outcomes"] = outcomes.generic_string();
  j["out"] = out.generic_string();
  j["cache_dir"] = cache_dir.generic_string();
  j["entity_filter"] = entity_filter.generic_string();
  j["schema"] = {{"entity", schema.entity}, {"period", schema.period}, {"category", schema.category}, {"count", schema.count}};
  j["window"] = window;
  j["rescale"] = to_string(rescale);
  j["metric"] = to_string(metric);
  j["lambda"] = lambda ? nlohmann::json(*lambda) : nlohmann::json(nullptr);
  j["filter_dims"] = filter_dims;
  j["cubes"] = cubes;
  j["overlap"] = overlap;
  j["bins"] = bins;
  j["baseline_k"] = baseline_k;
  j["seed"] = seed;
  j["max_iter"] = max_iter;
  j["threads"] = threads;
  return j;
}

namespace {

// One column per (outcome, regressor set).
void write_regression_table(std::ostream& out, const nlohmann::json& report) {
  const std::vector<std::pair<std::string, std::string>> rows{{"const", "Constant (= no flare)"},
                                                              {"flare_length", "Flare length"},
                                                              {"islands_only", "Islands only"},
                                                              {"log_count", "Log(Patents)"}};
  const auto& columns = report.at("columns");
  out << std::left << std::setw(24) << "";
  for (const auto& c : columns)
    out << std::right << std::setw(14) << (c.at("outcome").get<std::string>().substr(0, 6) + "/" +
                                           c.at("regressors").get<std::string>().substr(0, 4));
  out << '\n';
  for (const auto& [key, label] : rows) {
    out << std::left << std::setw(24) << label;
    std::ostringstream se;
    se << std::left << std::setw(24) << "";
    for (const auto& c : columns) {
      std::string est = "-";
      std::string err = "(-)";
      if (c.contains("coefficients")) {
        for (const auto& coef : c.at("coefficients")) {
          if (coef.at("name") == key) {
            est = fixed(coef.at("estimate").get<double>(), 2);
            err = "(" + fixed(coef.at("std_error").get<double>(), 2) + ")";
          }
        }
      } else {
        est = "n/a";
        err = "";
      }
      out << std::right << std::setw(14) << est;
      se << std::right << std::setw(14) << err;
    }
    out << '\n' << se.str() << '\n';
  }
  auto stat_row = [&](const char* label, const char* field, int digits) {
    out << std::left << std::setw(24) << label;
    for (const auto& c : columns) {
      std::string v = "n/a";
      if (c.contains(field)) {
        v = digits < 0 ? std::to_string(c.at(field).get<std::size_t>()) : fixed(c.at(field).get<double>(), digits);
      }
      out << std::right << std::setw(14) << v;
    }
    out << '\n';
  };
  stat_row("R^2", "r_squared", 3);
  stat_row("Adjusted R^2", "adj_r_squared", 3);
  stat_row("Number of observations", "n", -1);
  for (const auto& t : report.at("f_tests")) {
    out << "F-test flare terms (" << t.at("outcome").get<std::string>() << "): ";
    if (t.contains("f")) {
      out << "F(" << t.at("df_num") << ", " << t.at("df_den") << ") = " << fixed(t.at("f").get<double>(), 3)
          << ", p = " << t.at("p_value").get<double>() << '\n';
    } else {
      out << t.at("error").get<std::string>() << '\n';
    }
  }
  for (const auto& c : columns)
    if (c.contains("error"))
      out << "column " << c.at("outcome").get<std::string>() << "/" << c.at("regressors").get<std::string>() << ": "
          << c.at("error").get<std::string>() << '\n';
}

nlohmann::json run_regressions(const FlareCensus& census, std::vector<FirmOutcome> outcomes) {
  nlohmann::json report;
  report["columns"] = nlohmann::json::array();
  report["f_tests"] = nlohmann::json::array();
  for (Outcome o : {Outcome::Revenue, Outcome::Ebit, Outcome::MarketValue}) {
    std::map<Regressors, RegressionResult> fits;
    for (Regressors r : {Regressors::FlareOnly, Regressors::CountOnly, Regressors::Both}) {
      nlohmann::json col = {{"outcome", to_string(o)}, {"regressors", to_string(r)}};
      try {
        auto fit = flare_regression(census, outcomes, o, r);
        col.update(regression_json(fit));
        fits.emplace(r, std::move(fit));
      } catch (const RankError& e) {
        col["error"] = e.what();
      } catch (const ValidationError& e) {
        col["error"] = e.what();
      }
      report["columns"].push_back(std::move(col));
    }
    nlohmann::json test = {{"outcome", to_string(o)}, {"restriction", "flare_length = islands_only = 0"}};
    if (fits.contains(Regressors::Both) && fits.contains(Regressors::CountOnly)) {
      const auto t = f_test_restriction(fits.at(Regressors::Both), fits.at(Regressors::CountOnly), 2);
      test.update({{"f", t.f}, {"p_value", t.p_value}, {"df_num", t.df_num}, {"df_den", t.df_den}});
    } else {
      test["error"] = "unavailable: a model failed to fit";
    }
    report["f_tests"].push_back(std::move(test));
  }
  return report;
}

}  // namespace

RunManifest run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  if (fs::exists(cfg.out)) {
    if (!fs::is_directory(cfg.out)) throw ValidationError(cfg.out.string() + " exists and is not a directory");
    if (!fs::is_empty(cfg.out))
      throw ValidationError("output directory " + cfg.out.string() + " is not empty; each run needs a fresh directory");
  }
  fs::create_directories(cfg.out);

  RunManifest manifest;
  auto& m = manifest.json;
  m["config"] = cfg.to_json();
  m["canonical_config"] = cfg.canonical();
  m["config_hash"] = hex64(cfg.hash());
  m["isa"] = kernels::active().name;
  m["stages"] = nlohmann::json::array();
  m["artifacts"] = nlohmann::json::array();
  m["counts"] = nlohmann::json::object();
  m["drops"] = nlohmann::json::object();

  auto write_manifest = [&] {
    m["status"] = manifest.status;
    if (!manifest.failed_stage.empty()) {
      m["failed_stage"] = manifest.failed_stage;
      m["error"] = manifest.error;
    }
    write_text(cfg.out / "manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
  };
  auto artifact = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    write_text(cfg.out / name, body);
    m["artifacts"].push_back(name);
  };

  std::string stage;
  auto timed = [&](const std::string& name, auto&& fn) {
    stage = name;
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m["stages"].push_back({{"stage", name}, {"seconds", secs}});
  };

  const ExecOptions exec{cfg.threads};
  try {
    PanelDataset panel;
    PanelDataset windowed;
    RescaleResult rescaled;
    Metric metric;
    DissimilarityMatrix dm;
    FilterImage image;
    MapperGraph graph;
    FlareCensus census;
    std::uint64_t input_hash = 0;

    timed("ingest", [&] {
      input_hash = hash_file(cfg.input);
      m["input_hash"] = hex64(input_hash);
      panel = ingest_csv(cfg.input, cfg.schema);
      m["counts"]["panel_entities"] = panel.entities().size();
      m["counts"]["panel_categories"] = panel.categories().size();
      m["counts"]["panel_periods"] = panel.period_count();
      m["counts"]["panel_entries"] = panel.entries().size();
    });
    timed("window", [&] {
      windowed = moving_window(panel, cfg.window);
      m["counts"]["windowed_periods"] = windowed.period_count();
    });
    timed("rescale", [&] {
      rescaled = rescale(windowed, cfg.rescale);
      m["counts"]["points"] = rescaled.cloud.size();
      m["counts"]["dimension"] = rescaled.cloud.dimension();
      m["drops"]["rescale"] = rescaled.dropped.size();
      artifact("drops.jsonl", [&](std::ostream& os) { write_drop_report(os, rescaled.dropped); });
      if (rescaled.cloud.empty()) throw ValidationError("no entity-period has a nonzero window total");
    });
    const PointCloud& cloud = rescaled.cloud;
    timed("matrix", [&] {
      metric = Metric::of_kind(cfg.metric, cfg.lambda).fitted_to(cloud);
      const std::string key = "input=" + hex64(input_hash) + ";window=" + std::to_string(cfg.window) +
                              ";rescale=" + to_string(cfg.rescale) + ";metric=" + metric.descriptor() +
                              ";schema=" + cfg.schema.entity + "," + cfg.schema.period + "," + cfg.schema.category +
                              "," + cfg.schema.count;
      std::string cache_state = "disabled";
      if (!cfg.cache_dir.empty()) {
        fs::create_directories(cfg.cache_dir);
        const fs::path file = cfg.cache_dir / ("dm-" + hex64(fnv1a(key)) + ".bin");
        if (auto cached = read_matrix_cache(file, key); cached && cached->size() == cloud.size()) {
          dm = std::move(*cached);
          cache_state = "hit";
        } else {
          dm = dissimilarity_matrix(cloud, metric, exec);
          write_matrix_cache(file, dm, key);
          cache_state = "miss";
        }
        m["matrix_cache_file"] = file.generic_string();
      } else {
        dm = dissimilarity_matrix(cloud, metric, exec);
      }
      m["matrix_cache"] = cache_state;
      m["metric"] = metric.descriptor();
    });
    timed("filter", [&] { image = mapper_filter(cloud, static_cast<std::size_t>(cfg.filter_dims)); });
    timed("mapper", [&] {
      MapperConfig mc;
      mc.metric = metric;
      mc.filter_dims = static_cast<std::size_t>(cfg.filter_dims);
      mc.cover = {cfg.cubes, cfg.overlap};
      mc.bins = cfg.bins;
      mc.exec = exec;
      graph = run_mapper(image, dm, mc);
      auto gj = graph_json(graph, cloud);
      m["graph"] = gj.at("summary");
      artifact("graph.json", [&](std::ostream& os) { os << gj.dump() << '\n'; });
      artifact("graph.dot", [&](std::ostream& os) { write_dot(os, graph, cloud); });
    });
    timed("census", [&] {
      const auto eg = EntityGraph::from_mapper(graph, cloud, panel.entities());
      census = flare_census(eg, exec);
      std::size_t absent = 0;
      for (const auto& r : census.reports) absent += r.absent;
      m["counts"]["census_entities"] = census.histogram.total;
      m["counts"]["absent_entities"] = absent;
      artifact("census.csv", [&](std::ostream& os) { write_census_csv(os, census); });
      artifact("census_histogram.json", [&](std::ostream& os) { os << histogram_json(census.histogram).dump(2) << '\n'; });
      artifact("census_table.txt", [&](std::ostream& os) { write_histogram_table(os, census.histogram); });
      artifact("graph.html", [&](std::ostream& os) {
        write_html_report(os, graph_json(graph, cloud), &census, "Mapper graph (" + metric.descriptor() + ")");
      });
    });
    if (cfg.baseline_k > 0) {
      timed("baselines", [&] {
        const auto km = kmeans(cloud, cfg.baseline_k, cfg.seed, cfg.max_iter);
        const auto kmed = kmedoids(dm, cfg.baseline_k, cfg.seed, cfg.max_iter);
        const auto t1 = cluster_table(km, cloud);
        const auto t2 = cluster_table(kmed, cloud);
        artifact("kmeans_clusters.csv", [&](std::ostream& os) { write_cluster_csv(os, t1); });
        artifact("kmeans_clusters.json", [&](std::ostream& os) {
          auto j = cluster_json(t1);
          j["inertia"] = km.objective;
          j["iterations"] = km.iterations;
          os << j.dump(2) << '\n';
        });
        artifact("kmedoids_clusters.csv", [&](std::ostream& os) { write_cluster_csv(os, t2); });
        artifact("kmedoids_clusters.json", [&](std::ostream& os) {
          auto j = cluster_json(t2);
          j["total_dissimilarity"] = kmed.objective;
          j["medoids"] = nlohmann::json::array();
          for (auto c : kmed.centers) j["medoids"].push_back({{"entity", cloud.label(c).entity}, {"period", cloud.label(c).period}});
          os << j.dump(2) << '\n';
        });
      });
    }
    if (!cfg.outcomes.empty()) {
      timed("regressions", [&] {
        auto outcomes = read_outcomes(cfg.outcomes);
        const auto totals = panel.entity_totals();
        for (auto& o : outcomes) {
          try {
            o.total_count = totals[panel.entity_index(o.entity)];
          } catch (const LookupError&) {
            o.total_count = 0;
          }
        }
        if (!cfg.entity_filter.empty()) {
          std::ifstream in(cfg.entity_filter);
          if (!in) throw ValidationError("cannot open entity filter " + cfg.entity_filter.string());
          std::set<std::string> keep;
          std::string line;
          std::size_t line_no = 0;
          while (csv::read_line(in, line, line_no)) keep.insert(line);
          std::erase_if(outcomes, [&](const FirmOutcome& o) { return !keep.contains(o.entity); });
        }
        const auto report = run_regressions(census, std::move(outcomes));
        artifact("regression.json", [&](std::ostream& os) { os << report.dump(2) << '\n'; });
        artifact("regression.txt", [&](std::ostream& os) { write_regression_table(os, report); });
      });
    }
  } catch (const std::exception& e) {
    manifest.status = "incomplete";
    manifest.failed_stage = stage;
    manifest.error = e.what();
    write_manifest();
    throw StageError(stage, e.what());
  }
  manifest.status = "complete";
  write_manifest();
  return manifest;
}

bool RunComparison::empty() const {
  return changed.empty() && only_in_a.empty() && only_in_b.empty() && graph_a == graph_b;
}

nlohmann::json RunComparison::to_json() const {
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& c : changed) changes.push_back({{"entity", c.entity}, {"before", c.before}, {"after", c.after}});
  return {{"config_equal", config_equal}, {"changed_lengths", std::move(changes)},
          {"only_in_a", only_in_a},       {"only_in_b", only_in_b},
          {"graph_a", graph_a},           {"graph_b", graph_b},
          {"warnings", warnings},         {"empty", empty()}};
}

namespace {

nlohmann::json load_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ValidationError("no manifest.json in " + dir.string());
  auto j = nlohmann::json::parse(in);
  if (j.value("status", "") != "complete") throw ValidationError("run in " + dir.string() + " is not complete");
  return j;
}

std::map<std::string, std::string> load_lengths(const fs::path& dir) {
  std::ifstream in(dir / "census.csv");
  if (!in) throw ValidationError("no census.csv in " + dir.string());
  std::map<std::string, std::string> lengths;
  std::string line;
  std::size_t line_no = 0;
  csv::read_line(in, line, line_no);
  while (csv::read_line(in, line, line_no)) {
    const auto f = csv::split_record(line);
    if (f.size() < 3) throw ParseError(line_no, "malformed census row");
    if (f[2] == "absent") continue;
    lengths[f[0]] = f[1];
  }
  return lengths;
}

}  // namespace

RunComparison compare_runs(const fs::path& run_a, const fs::path& run_b) {
  const auto ma = load_manifest(run_a);
  const auto mb = load_manifest(run_b);
  RunComparison cmp;
  cmp.config_equal = ma.at("config_hash") == mb.at("config_hash");
  cmp.graph_a = ma.at("graph");
  cmp.graph_b = mb.at("graph");
  const auto la = load_lengths(run_a);
  const auto lb = load_lengths(run_b);
  for (const auto& [entity, len] : la) {
    auto it = lb.find(entity);
    if (it == lb.end()) {
      cmp.only_in_a.push_back(entity);
    } else if (it->second != len) {
      cmp.changed.push_back({entity, len, it->second});
    }
  }
  for (const auto& [entity, len] : lb)
    if (!la.contains(entity)) cmp.only_in_b.push_back(entity);
  if (!cmp.only_in_a.empty() || !cmp.only_in_b.empty())
    cmp.warnings.push_back("entity sets differ; lengths compared on the intersection");
  return cmp;
}

}  // namespace flaremap
