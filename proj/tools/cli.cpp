// Copyright 2026 The clrprune Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clrprune/arch.hpp"
#include "clrprune/counting.hpp"
#include "clrprune/error.hpp"
#include "clrprune/prune.hpp"
#include "clrprune/ranking.hpp"
#include "clrprune/selection.hpp"
#include "clrprune/weights.hpp"

namespace clrprune::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string arch_path;
  std::string weights_path;
  std::string plan_path;
  double p = 0.5;
  double lambda = 0.0;
  std::string selector = "rnf";
  std::vector<std::string> selectors{"rnf", "l1", "random", "kmeans"};
  std::uint64_t seed = 0;
  std::string out;
  bool count_bias = true;
  bool count_bn = false;
  std::vector<double> bins{0.0, 0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 1.0};

  CountOptions count_options() const { return CountOptions{count_bias, count_bn}; }
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Config:
      return kUsage;
    case ErrorKind::Format:
    case ErrorKind::Data:
    case ErrorKind::Io:
      return kDataOrFormat;
    case ErrorKind::Shape:
    case ErrorKind::Structural:
      return kStructural;
  }
  return kUsage;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  f << contents;
  if (!f) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

fs::path output_dir(const RunConfig& cfg) {
  if (cfg.out.empty()) fail(ErrorKind::Usage, "--out is required for this command");
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + cfg.out + "': " + ec.message());
  return fs::path(cfg.out);
}

void emit(const RunConfig& cfg, const std::string& file, const std::string& contents, std::ostream& out) {
  if (cfg.out.empty()) {
    out << contents;
  } else {
    write_file(output_dir(cfg) / file, contents);
  }
}

void cmd_flops(const RunConfig& cfg, std::ostream& out) {
  const auto arch = load_arch(cfg.arch_path);
  const auto flops = compute_layer_flops(arch);
  const auto params = compute_params(arch, cfg.count_options());

  out << std::left << std::setw(32) << "layer" << std::setw(18) << "kind" << std::right << std::setw(14)
      << "flops" << std::setw(12) << "params" << '\n';
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : arch.layers()) {
    const auto f = flops.at(l.id);
    const auto p = params.at(l.id);
    layers.push_back({{"id", l.id}, {"name", l.name}, {"kind", to_string(l.kind)}, {"flops", f}, {"params", p}});
    if (f == 0 && p == 0) continue;
    out << std::left << std::setw(32) << l.name << std::setw(18) << to_string(l.kind) << std::right
        << std::setw(14) << f << std::setw(12) << p << '\n';
  }
  out << "total FLOPs: " << format_count(total(flops)) << " (" << total(flops) << ")\n";
  out << "total params: " << format_count(total(params)) << " (" << total(params) << ")\n";

  if (!cfg.out.empty()) {
    nlohmann::ordered_json doc;
    doc["name"] = arch.name();
    doc["total_flops"] = total(flops);
    doc["total_params"] = total(params);
    doc["count_bias"] = cfg.count_bias;
    doc["count_bn"] = cfg.count_bn;
    doc["layers"] = std::move(layers);
    write_file(output_dir(cfg) / "flops.json", doc.dump(1) + "\n");
  }
}

void cmd_plan(const RunConfig& cfg, std::ostream& out) {
  const auto arch = load_arch(cfg.arch_path);
  const auto store = load_weights(cfg.weights_path);
  const auto plan = plan_structure(arch, store, cfg.p, cfg.lambda);
  emit(cfg, "structure.json", dump_structure(plan), out);
}

void cmd_prune(const RunConfig& cfg, std::ostream& out) {
  const auto arch = load_arch(cfg.arch_path);
  const auto store = load_weights(cfg.weights_path);
  const auto dir = output_dir(cfg);

  PrunePlan plan;
  if (!cfg.plan_path.empty()) {
    plan = load_plan(cfg.plan_path);
  } else {
    const auto structure = plan_structure(arch, store, cfg.p, cfg.lambda);
    plan = select_plan(arch, store, structure, parse_selector(cfg.selector), cfg.seed);
  }
  const auto pruned = apply_plan(arch, store, plan);
  const auto report = reduction_report(arch, pruned.arch, cfg.count_options());

  write_file(dir / "plan.json", dump_plan(plan));
  save_arch(pruned.arch, (dir / "pruned_arch.json").string());
  save_weights(pruned.weights, (dir / "pruned.clrw").string());
  write_file(dir / "report.csv", reduction_csv(report));
  write_file(dir / "report.json", reduction_json(report));

  out << "FLOPs:  " << format_count(report.total.flops_before) << " -> "
      << format_with_reduction(report.total.flops_before, report.total.flops_after) << '\n';
  out << "Params: " << format_count(report.total.params_before) << " -> "
      << format_with_reduction(report.total.params_before, report.total.params_after) << '\n';
}

void cmd_compare(const RunConfig& cfg, std::ostream& out) {
  const auto arch = load_arch(cfg.arch_path);
  const auto store = load_weights(cfg.weights_path);
  const auto structure = plan_structure(arch, store, cfg.p, cfg.lambda);

  std::vector<Selector> selectors;
  for (const auto& s : cfg.selectors) selectors.push_back(parse_selector(s));

  std::ostringstream csv;
  csv << "layer_id,layer,filters,keep,selector,jaccard_vs_rnf\n";
  for (const auto& lp : structure.layers) {
    const auto filters = flatten_filters(store.at(weight_key(lp.name)));
    const auto target = static_cast<std::size_t>(lp.keep);
    const auto reference = rnf_select(filters, target, lp.layer_id);
    for (auto sel : selectors) {
      const auto result = select_filters(sel, filters, target, cfg.seed, lp.layer_id);
      csv << lp.layer_id << ',' << lp.name << ',' << lp.filters << ',' << lp.keep << ',' << to_string(sel) << ','
          << std::setprecision(10) << jaccard(result.kept, reference.kept) << '\n';
    }
  }
  emit(cfg, "compare.csv", csv.str(), out);
}

void cmd_report(const RunConfig& cfg, std::ostream&) {
  const auto arch = load_arch(cfg.arch_path);
  const auto store = load_weights(cfg.weights_path);
  const auto report = longtail_report(arch, store, cfg.bins, cfg.p, cfg.lambda);
  const auto dir = output_dir(cfg);
  write_file(dir / "longtail_hist.csv", longtail_histogram_csv(report));
  write_file(dir / "longtail_rates.csv", longtail_rates_csv(report));
}

void cmd_synth(const RunConfig& cfg, std::ostream&) {
  if (cfg.out.empty()) fail(ErrorKind::Usage, "--out is required for this command");
  const auto arch = load_arch(cfg.arch_path);
  save_weights(synthesize_weights(arch, cfg.seed), cfg.out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"clrprune: cross-layer ranking and k-reciprocal nearest filter pruning"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags take precedence");

  const auto rate_check = CLI::Validator(
      [](std::string& v) -> std::string {
        double x = 0.0;
        if (!CLI::detail::lexical_cast(v, x)) return "p must be a number";
        return (x >= 0.0 && x < 1.0) ? std::string() : "p must lie in [0, 1)";
      },
      "[0,1)");

  auto add_arch = [&](CLI::App* sub) {
    sub->add_option("--arch", cfg.arch_path, "architecture JSON")->required()->check(CLI::ExistingFile);
  };
  auto add_weights = [&](CLI::App* sub) {
    sub->add_option("--weights", cfg.weights_path, "CLRW weight file")->required()->check(CLI::ExistingFile);
  };
  auto add_ranking = [&](CLI::App* sub) {
    sub->add_option("--p", cfg.p, "global weight pruning rate")->check(rate_check)->capture_default_str();
    sub->add_option("--lambda", cfg.lambda, "FLOPs exponent of the importance score")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  };
  auto add_counting = [&](CLI::App* sub) {
    sub->add_option("--count-bias", cfg.count_bias, "count conv/FC biases as parameters")->capture_default_str();
    sub->add_option("--count-bn", cfg.count_bn, "count batchnorm running statistics as parameters")
        ->capture_default_str();
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "seed for randomized selectors")->capture_default_str();
  };

  auto* flops = app.add_subcommand("flops", "per-layer and total FLOPs/parameters");
  add_arch(flops);
  add_counting(flops);
  flops->add_option("--out", cfg.out, "directory for flops.json");

  auto* plan = app.add_subcommand("plan", "cross-layer ranking: per-layer rates and preserved filter counts");
  add_arch(plan);
  add_weights(plan);
  add_ranking(plan);
  plan->add_option("--out", cfg.out, "directory for structure.json (stdout when omitted)");

  auto* prune = app.add_subcommand("prune", "plan, select filters and rewrite the model");
  add_arch(prune);
  add_weights(prune);
  add_ranking(prune);
  add_counting(prune);
  add_seed(prune);
  prune->add_option("--selector", cfg.selector, "rnf, l1, random or kmeans")
      ->check(CLI::IsMember({"rnf", "l1", "random", "kmeans"}))
      ->capture_default_str();
  prune->add_option("--plan", cfg.plan_path, "apply this plan JSON instead of computing one")
      ->check(CLI::ExistingFile);
  prune->add_option("--out", cfg.out, "output directory")->required();

  auto* compare = app.add_subcommand("compare", "overlap of baseline selectors with RNF on one structure");
  add_arch(compare);
  add_weights(compare);
  add_ranking(compare);
  add_seed(compare);
  compare->add_option("--selectors", cfg.selectors, "selectors to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"rnf", "l1", "random", "kmeans"}));
  compare->add_option("--out", cfg.out, "directory for compare.csv (stdout when omitted)");

  auto* report = app.add_subcommand("report", "per-layer weight magnitude histograms and rates");
  add_arch(report);
  add_weights(report);
  add_ranking(report);
  report->add_option("--bins", cfg.bins, "increasing |w| bin edges")->delimiter(',');
  report->add_option("--out", cfg.out, "output directory")->required();

  auto* synth = app.add_subcommand("synth", "write deterministic random weights for an architecture");
  add_arch(synth);
  add_seed(synth);
  synth->add_option("--out", cfg.out, "output CLRW file")->required();

  std::vector<const char*> argv{"clrprune"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "clrprune: " << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) {
      err << sub->help();
    }
    return kUsage;
  }

  try {
    if (flops->parsed()) cmd_flops(cfg, out);
    if (plan->parsed()) cmd_plan(cfg, out);
    if (prune->parsed()) cmd_prune(cfg, out);
    if (compare->parsed()) cmd_compare(cfg, out);
    if (report->parsed()) cmd_report(cfg, out);
    if (synth->parsed()) cmd_synth(cfg, out);
  } catch (const Error& e) {
    err << "clrprune: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "clrprune: " << e.what() << '\n';
    return kDataOrFormat;
  }
  return kOk;
}

}  // namespace clrprune::cli
