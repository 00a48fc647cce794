#include "deltanet/config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace deltanet {

namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {
    "variant", "alpha",     "delta",         "dataset",    "data_dir",
    "classnum", "epochs",   "batch_size",    "lr",         "seed",
    "subset_n", "test_subset_n", "checkpoint", "count_bn", "eval_fmp_passes"};

[[noreturn]] void key_error(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

template <typename T>
T get(const json& doc, const std::string& key, T fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  try {
    return doc[key].get<T>();
  } catch (const json::exception&) {
    key_error(key, "wrong type (" + std::string(doc[key].type_name()) + ")");
  }
}

std::int64_t get_int(const json& doc, const std::string& key, std::int64_t fallback,
                     std::int64_t min) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  if (!doc[key].is_number_integer()) key_error(key, "must be an integer");
  const auto v = doc[key].get<std::int64_t>();
  if (v < min) key_error(key, "must be >= " + std::to_string(min) + ", got " + std::to_string(v));
  return v;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.contains(key)) key_error(key, "unknown key");
  }

  RunConfig cfg;
  TrainConfig& t = cfg.train;
  try {
    t.arch.variant = parse_variant(get<std::string>(doc, "variant", "table1"));
  } catch (const std::invalid_argument& e) {
    key_error("variant", e.what());
  }
  t.arch.alpha = get<double>(doc, "alpha", 1.0);
  if (!(t.arch.alpha > 0.0 && t.arch.alpha <= 1.0)) key_error("alpha", "must be in (0, 1]");
  t.arch.delta = static_cast<int>(get_int(doc, "delta", 1, 1));
  try {
    t.dataset = parse_dataset(get<std::string>(doc, "dataset", "cifar10"));
  } catch (const std::invalid_argument& e) {
    key_error("dataset", e.what());
  }
  t.arch.classnum = dataset_classes(t.dataset);
  if (doc.contains("classnum") && get_int(doc, "classnum", 0, 1) != t.arch.classnum) {
    key_error("classnum", "must equal " + std::to_string(t.arch.classnum) + " for " +
                              std::string(dataset_name(t.dataset)));
  }

  std::string data_dir = get<std::string>(doc, "data_dir", "");
  if (data_dir.empty()) {
    if (const char* env = std::getenv("DELTANET_DATA_DIR")) data_dir = env;
  }
  t.data_dir = data_dir;
  t.epochs = static_cast<int>(get_int(doc, "epochs", t.epochs, 0));
  t.batch_size = static_cast<int>(get_int(doc, "batch_size", t.batch_size, 1));
  t.lr = get<double>(doc, "lr", t.lr);
  if (!(t.lr > 0)) key_error("lr", "must be > 0");
  t.seed = static_cast<std::uint64_t>(get_int(doc, "seed", 0, 0));
  if (doc.contains("subset_n") && !doc["subset_n"].is_null()) {
    t.subset_n = get_int(doc, "subset_n", 0, 1);
  }
  if (doc.contains("test_subset_n") && !doc["test_subset_n"].is_null()) {
    t.test_subset_n = get_int(doc, "test_subset_n", 0, 1);
  }
  t.checkpoint = get<std::string>(doc, "checkpoint", "");
  cfg.count_bn = get<bool>(doc, "count_bn", true);
  t.eval_fmp_passes = static_cast<int>(get_int(doc, "eval_fmp_passes", 1, 1));
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace deltanet
