// flaremap: Mapper graphs and per-entity flare statistics from count panels.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "flaremap/error.hpp"
#include "flaremap/kernels.hpp"
#include "flaremap/pipeline.hpp"

namespace {

// Config-file values for options not given on the command line.
void apply_config_file(CLI::App& sub, const std::string& path) {
  if (!std::ifstream(path)) throw flaremap::ValidationError("cannot open config file " + path);
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + item.fullname());
    if (opt == nullptr || item.fullname() == "config")
      throw flaremap::ValidationError("unknown key '" + item.fullname() + "' in config file " + path);
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mapper shape graphs and flare statistics for entity x period x category count panels"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--isa", isa, "Kernel instruction set: scalar|avx2|neon (default: best available)");

  flaremap::RunConfig cfg;
  std::string rescale = "log";
  std::string metric = "cosine";
  double lambda = 0.0;
  auto* run = app.add_subcommand("run", "Run the full pipeline into a fresh output directory");
  std::string config_path;
  run->add_option("--config", config_path, "Key-value config file (key = value); flags override it");
  run->add_option("--input", cfg.input, "Panel CSV (entity,period,category,count)");
  run->add_option("--outcomes", cfg.outcomes, "Outcomes CSV (entity,revenue,ebit,market_value)");
  run->add_option("--out", cfg.out, "Output directory (must be new or empty)");
  run->add_option("--cache-dir", cfg.cache_dir, "Directory for dissimilarity-matrix caches");
  run->add_option("--entity-filter", cfg.entity_filter, "File of entity ids (one per line) kept in regressions");
  run->add_option("--col-entity", cfg.schema.entity, "Entity column name")->capture_default_str();
  run->add_option("--col-period", cfg.schema.period, "Period column name")->capture_default_str();
  run->add_option("--col-category", cfg.schema.category, "Category column name")->capture_default_str();
  run->add_option("--col-count", cfg.schema.count, "Count column name")->capture_default_str();
  run->add_option("--window", cfg.window, "Moving-window length")->capture_default_str();
  run->add_option("--rescale", rescale, "log|share")->capture_default_str();
  run->add_option("--metric", metric, "cosine|euclidean|correlation|mincomplement|mahalanobis")->capture_default_str();
  auto* lambda_opt = run->add_option("--lambda", lambda, "Mahalanobis regularization (default 1e-6 * trace / dim)");
  run->add_option("--filter-dims", cfg.filter_dims, "Number of principal axes in the filter")->capture_default_str();
  run->add_option("--cubes", cfg.cubes, "Cover intervals per filter dimension")->capture_default_str();
  run->add_option("--overlap", cfg.overlap, "Cover overlap fraction in [0, 1)")->capture_default_str();
  run->add_option("--bins", cfg.bins, "Histogram bins for the single-linkage gap rule")->capture_default_str();
  run->add_option("--baseline-k", cfg.baseline_k, "Clusters for k-means/k-medoids baselines (0 = skip)")
      ->capture_default_str();
  run->add_option("--seed", cfg.seed, "Seed for the baselines")->capture_default_str();
  run->add_option("--max-iter", cfg.max_iter, "Iteration cap for the baselines")->capture_default_str();
  run->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();

  std::string dir_a;
  std::string dir_b;
  std::string report_path;
  auto* compare = app.add_subcommand("compare", "Diff the flare lengths and graph summaries of two runs");
  compare->add_option("run_a", dir_a, "First run directory")->required();
  compare->add_option("run_b", dir_b, "Second run directory")->required();
  compare->add_option("--report", report_path, "Write the diff as JSON to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!isa.empty()) flaremap::kernels::set_active(flaremap::kernels::parse_isa(isa));
    if (run->parsed()) {
      if (!config_path.empty()) apply_config_file(*run, config_path);
      cfg.rescale = flaremap::parse_rescale(rescale);
      cfg.metric = flaremap::parse_metric(metric);
      if (lambda_opt->count() > 0) cfg.lambda = lambda;
      const auto manifest = flaremap::run_pipeline(cfg);
      const auto& g = manifest.json.at("graph");
      std::cout << "run complete: " << g.at("nodes") << " nodes, " << g.at("edges") << " edges, "
                << g.at("components") << " components; outputs in " << cfg.out.string() << '\n';
      return EXIT_SUCCESS;
    }
    const auto cmp = flaremap::compare_runs(dir_a, dir_b);
    const auto j = cmp.to_json();
    if (!report_path.empty()) {
      std::ofstream(report_path) << j.dump(2) << '\n';
    }
    for (const auto& w : cmp.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "config " << (cmp.config_equal ? "identical" : "differs") << "; " << cmp.changed.size()
              << " flare length change(s)\n";
    for (const auto& c : cmp.changed) std::cout << "  " << c.entity << ": " << c.before << " -> " << c.after << '\n';
    std::cout << "graph A: " << cmp.graph_a.dump() << "\ngraph B: " << cmp.graph_b.dump() << '\n';
    return EXIT_SUCCESS;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
}
