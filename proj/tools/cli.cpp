#include "cli.hpp"

#include "deltanet/checkpoint.hpp"
#include "deltanet/config.hpp"
#include "deltanet/report.hpp"
#include "deltanet/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

namespace deltanet::cli {

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string checkpoint;
  std::string results_dir;
  bool sweep = false;
  std::optional<std::uint64_t> seed;
  std::optional<bool> count_bn;
};

RunConfig load_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = RunConfig::load(o.config);
  if (o.seed) cfg.train.seed = *o.seed;
  if (!o.checkpoint.empty()) cfg.train.checkpoint = o.checkpoint;
  if (o.count_bn) cfg.count_bn = *o.count_bn;
  cfg.train.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw std::runtime_error("cannot write " + path);
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
  } else {
    write_text(o.out, text);
  }
}

int cmd_describe(const Options& o, std::ostream& out) {
  out << describe(load_config(o).train.arch);
  return 0;
}

int cmd_cost(const Options& o, std::ostream& out) {
  if (o.sweep) {
    std::vector<Variant> variants{Variant::Baseline, Variant::MaxPool3, Variant::Fmp};
    bool count_bn = o.count_bn.value_or(true);
    if (!o.config.empty()) {
      const RunConfig cfg = load_config(o);
      variants = {cfg.train.arch.variant};
      count_bn = cfg.count_bn;
    }
    emit(o, cost_sweep_csv(count_bn, variants), out);
    return 0;
  }
  const RunConfig cfg = load_config(o);
  emit(o,
       std::string(kCostCsvHeader) + "\n" +
           cost_csv_row(cfg.train.arch, cfg.train.dataset, cfg.count_bn) + "\n",
       out);
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const TrainResult result = train(cfg.train, &out);
  if (!o.out.empty()) {
    const double acc = std::max(result.history.best_test_acc, 0.0);
    write_text(o.out, to_json(make_record(cfg.train.arch, cfg.train.dataset, acc, cfg.count_bn)));
  }
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  if (cfg.train.checkpoint.empty()) throw ConfigError("eval needs --checkpoint or a checkpoint key");
  Network<float> net(cfg.train.arch, cfg.train.seed, cfg.train.dropout);
  net.load_params(load_checkpoint<float>(cfg.train.checkpoint));
  Dataset test_set = load_cifar(cfg.train.dataset, cfg.train.data_dir, Split::Test);
  if (cfg.train.test_subset_n) test_set = test_set.head(*cfg.train.test_subset_n);
  const double acc = evaluate(net, test_set, cfg.train.eval_fmp_passes, cfg.train.batch_size);
  char buf[64];
  std::snprintf(buf, sizeof buf, "accuracy=%.4f", acc);
  out << buf << "\n";
  if (!o.out.empty()) {
    write_text(o.out, to_json(make_record(cfg.train.arch, cfg.train.dataset, acc, cfg.count_bn)));
  }
  return 0;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.results_dir.empty()) throw ConfigError("--results-dir is required");
  const Report report = build_report(o.results_dir);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  out << report.markdown;
  if (!o.out.empty()) write_text(o.out, report.csv);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Depth-multiplier MobileNet toolkit", "deltanet"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", o.config, "JSON run config"); };
  auto* describe_cmd = app.add_subcommand("describe", "Print the layer table");
  add_config(describe_cmd);

  auto* cost_cmd = app.add_subcommand("cost", "Print analytical cost as CSV");
  add_config(cost_cmd);
  cost_cmd->add_flag("--sweep", o.sweep, "All alpha/delta/dataset combinations");
  cost_cmd->add_option("--out", o.out, "Write the CSV here instead of stdout");
  cost_cmd->add_option("--count-bn", o.count_bn, "Count batch-norm parameters (true/false)");

  auto* train_cmd = app.add_subcommand("train", "Train and checkpoint the best epoch");
  add_config(train_cmd);
  train_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
  train_cmd->add_option("--seed", o.seed, "Override the config seed");
  train_cmd->add_option("--out", o.out, "Write a result record here");
  train_cmd->add_option("--count-bn", o.count_bn, "Count batch-norm parameters in the record");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_config(eval_cmd);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
  eval_cmd->add_option("--seed", o.seed, "Override the config seed");
  eval_cmd->add_option("--out", o.out, "Write a result record here");
  eval_cmd->add_option("--count-bn", o.count_bn, "Count batch-norm parameters in the record");

  auto* report_cmd = app.add_subcommand("report", "Aggregate result records");
  report_cmd->add_option("--results-dir", o.results_dir, "Directory of *.json results");
  report_cmd->add_option("--out", o.out, "Write the CSV here");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*describe_cmd) return cmd_describe(o, out);
    if (*cost_cmd) return cmd_cost(o, out);
    if (*train_cmd) return cmd_train(o, out);
    if (*eval_cmd) return cmd_eval(o, out);
    if (*report_cmd) return cmd_report(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace deltanet::cli
