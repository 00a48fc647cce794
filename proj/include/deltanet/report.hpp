#pragma once

#include "deltanet/arch.hpp"
#include "deltanet/cifar.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace deltanet {

/// Layer table: header plus one `type | filter | input` row per layer.
std::string describe(const ArchSpec& spec);

inline constexpr const char* kCostCsvHeader =
    "variant,alpha,delta,dataset,mult_adds_millions,params_millions";

std::string cost_csv_row(const ArchSpec& spec, DatasetName dataset, bool count_bn);

/// Each listed variant over alpha in {1, 0.5, 0.25}, delta in
/// {1, 2, 4} and both datasets, header included.
std::string cost_sweep_csv(bool count_bn, const std::vector<Variant>& variants);

std::string format_alpha(double alpha);

/// One train/eval outcome, stored as a small JSON file.
struct ResultRecord {
  Variant variant = Variant::Baseline;
  double alpha = 1.0;
  int delta = 1;
  DatasetName dataset = DatasetName::Cifar10;
  double accuracy = 0;
  double mult_adds_millions = 0;
  double params_millions = 0;
};

std::string to_json(const ResultRecord& r);
ResultRecord parse_result(const std::string& json_text);
ResultRecord make_record(const ArchSpec& spec, DatasetName dataset, double accuracy, bool count_bn);

struct Report {
  std::string markdown;
  std::string csv;
  std::vector<std::string> warnings;  // one per skipped file
  std::size_t rows = 0;
};

/// Aggregate every *.json result in `dir`. Malformed files are skipped with
/// a warning. Rows are grouped by dataset and variant and ordered by delta,
/// then alpha from wide to thin; the delta = 1, alpha = 1 row of the plain
/// network is labelled "Baseline".
Report build_report(const std::filesystem::path& dir);

}  // namespace deltanet
