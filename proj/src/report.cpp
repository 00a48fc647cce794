#include "deltanet/report.hpp"

#include "deltanet/cost.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

namespace deltanet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string describe(const ArchSpec& spec) {
  std::string out = "Type / Stride | Filter Shape | Input Size\n";
  for (const LayerSpec& l : build(spec)) {
    out += type_label(l) + " | " + filter_label(l) + " | " + input_label(l) + "\n";
  }
  return out;
}

std::string format_alpha(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", alpha);
  return buf;
}

std::string cost_csv_row(const ArchSpec& spec, DatasetName dataset, bool count_bn) {
  ArchSpec s = spec;
  s.classnum = dataset_classes(dataset);
  const CostReport report = model_cost(build(s), count_bn);
  return std::string(variant_name(s.variant)) + "," + format_alpha(s.alpha) + "," +
         std::to_string(s.delta) + "," + std::string(dataset_name(dataset)) + "," +
         format_millions(report.total_mult_adds()) + "," + format_millions(report.total_params());
}

std::string cost_sweep_csv(bool count_bn, const std::vector<Variant>& variants) {
  std::string out = std::string(kCostCsvHeader) + "\n";
  for (Variant v : variants) {
    for (DatasetName d : {DatasetName::Cifar10, DatasetName::Cifar100}) {
      for (int delta : {1, 2, 4}) {
        for (double alpha : {1.0, 0.5, 0.25}) {
          ArchSpec spec;
          spec.variant = v;
          spec.alpha = alpha;
          spec.delta = delta;
          out += cost_csv_row(spec, d, count_bn) + "\n";
        }
      }
    }
  }
  return out;
}

std::string to_json(const ResultRecord& r) {
  json doc = {{"variant", variant_name(r.variant)},
              {"alpha", r.alpha},
              {"delta", r.delta},
              {"dataset", dataset_name(r.dataset)},
              {"accuracy", r.accuracy},
              {"mult_adds_millions", r.mult_adds_millions},
              {"params_millions", r.params_millions}};
  return doc.dump(2) + "\n";
}

ResultRecord parse_result(const std::string& json_text) {
  const json doc = json::parse(json_text);
  ResultRecord r;
  r.variant = parse_variant(doc.at("variant").get<std::string>());
  r.alpha = doc.at("alpha").get<double>();
  r.delta = doc.at("delta").get<int>();
  r.dataset = parse_dataset(doc.at("dataset").get<std::string>());
  r.accuracy = doc.at("accuracy").get<double>();
  r.mult_adds_millions = doc.at("mult_adds_millions").get<double>();
  r.params_millions = doc.at("params_millions").get<double>();
  return r;
}

ResultRecord make_record(const ArchSpec& spec, DatasetName dataset, double accuracy,
                         bool count_bn) {
  const CostReport report = model_cost(build(spec), count_bn);
  return {spec.variant,
          spec.alpha,
          spec.delta,
          dataset,
          accuracy,
          millions(report.total_mult_adds()),
          millions(report.total_params())};
}

namespace {

std::string model_label(const ResultRecord& r) {
  if (r.variant == Variant::Baseline && r.delta == 1 && r.alpha == 1.0) return "Baseline";
  return "delta = " + std::to_string(r.delta) + ", alpha = " + format_alpha(r.alpha);
}

std::string dataset_title(DatasetName d) {
  return d == DatasetName::Cifar10 ? "CIFAR-10" : "CIFAR-100";
}

std::string fixed(double v, const char* fmt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

Report build_report(const fs::path& dir) {
  Report report;
  std::vector<ResultRecord> records;
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      records.push_back(parse_result(ss.str()));
    } catch (const std::exception& e) {
      report.warnings.push_back("skipping " + f.string() + ": " + e.what());
    }
  }
  if (records.empty()) {
    report.markdown = "No result files found in " + dir.string() + ".\n";
    report.csv = "variant,alpha,delta,dataset,model,accuracy,mult_adds_millions,params_millions\n";
    return report;
  }

  std::stable_sort(records.begin(), records.end(), [](const ResultRecord& a, const ResultRecord& b) {
    return std::tuple(a.dataset, a.variant, a.delta, -a.alpha) <
           std::tuple(b.dataset, b.variant, b.delta, -b.alpha);
  });
  report.rows = records.size();
  report.csv = "variant,alpha,delta,dataset,model,accuracy,mult_adds_millions,params_millions\n";
  bool first = true;
  std::tuple<DatasetName, Variant> group{};
  for (const auto& r : records) {
    const auto key = std::tuple(r.dataset, r.variant);
    if (first || key != group) {
      if (!first) report.markdown += "\n";
      report.markdown += "### " + std::string(variant_name(r.variant)) + " / " +
                         std::string(dataset_name(r.dataset)) + "\n\n";
      report.markdown += "| Model | " + dataset_title(r.dataset) +
                         " Accuracy | Million Mult-Adds | Million Parameters |\n";
      report.markdown += "|---|---|---|---|\n";
      group = key;
      first = false;
    }
    const std::string label = model_label(r);
    report.markdown += "| " + label + " | " + fixed(100.0 * r.accuracy, "%.1f%%") + " | " +
                       fixed(r.mult_adds_millions, "%.2f") + " | " +
                       fixed(r.params_millions, "%.2f") + " |\n";
    report.csv += std::string(variant_name(r.variant)) + "," + format_alpha(r.alpha) + "," +
                  std::to_string(r.delta) + "," + std::string(dataset_name(r.dataset)) + "," +
                  "\"" + label + "\"," + fixed(r.accuracy, "%.4f") + "," +
                  fixed(r.mult_adds_millions, "%.2f") + "," + fixed(r.params_millions, "%.2f") +
                  "\n";
  }
  return report;
}

}  // namespace deltanet
