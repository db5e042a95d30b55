// said: prepare / run / report / gradcheck / weights-audit.
// Exit codes: 0 success, 1 a grid cell failed (or gradcheck over tolerance),
// 2 config or data error.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "said/gradcheck.hpp"
#include "said/harness/commands.hpp"

namespace {

constexpr int kCellFailure = 1;
constexpr int kInputError = 2;

said::ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  said::ConfigMap map = path.empty() ? said::ConfigMap{} : said::load_config_file(path);
  said::apply_overrides(map, overrides);
  return said::make_config(map);
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-aware interaction denoising for CTR models"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const auto config_flags = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "config file (key = value with [section] headers)");
    sub->add_option("-s,--set", overrides, "override a config key, e.g. --set train.epochs=5")
        ->allow_extra_args(false);
  };

  auto* prepare = app.add_subcommand("prepare", "build splits, negatives, profiles and the texts manifest");
  config_flags(prepare);

  auto* run = app.add_subcommand("run", "train and evaluate every (noise, alpha, seed) cell");
  config_flags(run);

  std::string report_path, report_out;
  auto* report = app.add_subcommand("report", "turn report.json into CSV tables");
  report->add_option("report", report_path, "path to report.json")->required();
  report->add_option("-o,--out", report_out, "output directory (default: next to the report)");

  std::uint64_t gc_seed = 1;
  std::size_t gc_points = 100;
  double gc_tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
  gradcheck->add_option("--seed", gc_seed, "random seed");
  gradcheck->add_option("--points", gc_points, "random parameter points");
  gradcheck->add_option("--tolerance", gc_tolerance, "maximum relative error");

  double audit_noise = 0.0;
  std::uint64_t audit_seed = 1;
  std::string audit_out;
  auto* audit = app.add_subcommand("weights-audit", "dump similarity and weight of every train positive");
  config_flags(audit);
  audit->add_option("--noise", audit_noise, "noise ratio to inject first");
  audit->add_option("--seed", audit_seed, "noise seed");
  audit->add_option("-o,--out", audit_out, "TSV path (default: <output.dir>/weights_audit.tsv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      const auto cfg = load(config_path, overrides);
      const auto data = said::prepare(cfg);
      const auto dir = said::data_dir(cfg);
      said::write_prepared(dir, data, cfg);
      for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
      std::size_t pos = 0;
      for (const auto* part : {&data.split.train, &data.split.validation, &data.split.test}) {
        for (const auto& x : *part) pos += x.label == 1 ? 1 : 0;
      }
      std::cout << "prepared " << data.split.users.size() << " users, " << data.split.items.size()
                << " items, " << pos << " positives into " << dir.string() << '\n';
      return 0;
    }
    if (*run) {
      const auto cfg = load(config_path, overrides);
      const auto rep = said::run_experiment(cfg, log_line);
      std::cout << "wrote " << (said::fs::path(cfg.output_dir) / "report.json").string() << " (config "
                << rep.provenance.config_hash << ")\n";
      if (rep.any_failed()) {
        std::cerr << "one or more cells failed; see report.json\n";
        return kCellFailure;
      }
      return 0;
    }
    if (*report) {
      const auto rep = said::load_report(report_path);
      const auto out = report_out.empty() ? said::fs::path(report_path).parent_path() : said::fs::path(report_out);
      const auto t = said::write_report_tables(rep, out.empty() ? said::fs::path(".") : out);
      std::cout << t.noise_sweep.string() << '\n' << t.alpha_sweep.string() << '\n' << t.comparison.string() << '\n';
      return 0;
    }
    if (*gradcheck) {
      said::GradCheckOptions opt;
      opt.points = gc_points;
      const auto r = said::gradient_check(gc_seed, opt);
      std::cout << "points " << r.points << ", components " << r.components_checked << " checked, "
                << r.components_skipped << " skipped at ReLU kinks\n"
                << "max relative error " << r.max_relative_error << " (" << r.worst_parameter << ")\n";
      return r.max_relative_error < gc_tolerance ? 0 : kCellFailure;
    }
    if (*audit) {
      const auto cfg = load(config_path, overrides);
      const auto path = audit_out.empty() ? (said::fs::path(cfg.output_dir) / "weights_audit.tsv").string() : audit_out;
      std::ofstream out(path);
      if (!out) throw said::DataError("cannot write '" + path + "'");
      said::weights_audit(cfg, audit_noise, audit_seed, out);
      std::cout << "wrote " << path << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return 0;
}
