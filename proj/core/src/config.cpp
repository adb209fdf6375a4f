#include "spal/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace spal {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Reader {
 public:
  explicit Reader(const std::map<std::string, std::string>& kv) : kv_(kv) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  const std::string& raw(const std::string& key) const { return kv_.at(key); }

  template <typename T>
  void read(const std::string& key, T& out) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return;
    const std::string& v = it->second;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (v == "true" || v == "1" || v == "yes" || v == "on") {
          out = true;
        } else if (v == "false" || v == "0" || v == "no" || v == "off") {
          out = false;
        } else {
          throw std::invalid_argument(v);
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        std::size_t used = 0;
        out = static_cast<T>(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } else if constexpr (std::is_integral_v<T>) {
        std::size_t used = 0;
        const unsigned long long parsed = std::stoull(v, &used);
        if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
        out = static_cast<T>(parsed);
      } else {
        out = T(v);
      }
    } catch (const std::logic_error&) {
      throw FormatError("config: invalid value '" + v + "' for key '" + key + "'");
    }
  }

 private:
  const std::map<std::string, std::string>& kv_;
};

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = line;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '"') quoted = !quoted;
      if (body[i] == '#' && !quoted) {
        body.resize(i);
        break;
      }
    }
    body = trim(body);
    if (body.empty() || body.front() == '[') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

LoopConfig LoopConfig::from_key_values(const std::map<std::string, std::string>& kv,
                                       const std::filesystem::path& base_dir) {
  static const char* kKnown[] = {"name",          "manifest",      "runs_dir",     "base_algo",   "base_size",
                                 "compactness",   "slic_iters",    "merge",        "epsilon",     "merge_fraction",
                                 "criterion",     "selection",     "sieve",        "sample_count", "min_pixels_for_knee",
                                 "budget",        "rounds",        "learning_rate", "epochs",     "batch_size",
                                 "seed",          "oracle",        "http_port",    "partial",     "num_classes",
                                 "ignore_id",     "base_dir",      "probs_dir",    "slic_smoothing"};
  for (const auto& [key, value] : kv) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw FormatError("config: unknown key '" + key + "'");
    }
  }
  Reader r(kv);
  LoopConfig cfg;
  r.read("name", cfg.name);
  if (r.has("manifest")) {
    cfg.manifest = r.raw("manifest");
    if (cfg.manifest.is_relative() && !base_dir.empty()) cfg.manifest = base_dir / cfg.manifest;
  }
  auto read_path = [&](const std::string& key, std::filesystem::path& out) {
    if (!r.has(key) || r.raw(key).empty()) return;
    out = r.raw(key);
    if (out.is_relative() && !base_dir.empty()) out = base_dir / out;
  };
  read_path("runs_dir", cfg.runs_dir);
  read_path("base_dir", cfg.base_dir);
  read_path("probs_dir", cfg.probs_dir);
  if (r.has("base_algo")) {
    const auto& v = r.raw("base_algo");
    if (v == "slic") {
      cfg.base_algorithm = BaseAlgorithm::kSlic;
    } else if (v == "grid") {
      cfg.base_algorithm = BaseAlgorithm::kGrid;
    } else if (v == "import") {
      cfg.base_algorithm = BaseAlgorithm::kImport;
    } else {
      throw FormatError("config: base_algo must be slic, grid or import");
    }
  }
  std::uint32_t base_size = cfg.slic.target_region_size;
  r.read("base_size", base_size);
  if (base_size < 1) throw FormatError("config: base_size must be >= 1");
  cfg.slic.target_region_size = base_size;
  cfg.grid_cell = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(std::sqrt(double(base_size)))));
  r.read("compactness", cfg.slic.compactness);
  r.read("slic_iters", cfg.slic.iterations);
  r.read("slic_smoothing", cfg.slic.smoothing);
  r.read("merge", cfg.merge);
  r.read("epsilon", cfg.merge_cfg.epsilon);
  r.read("merge_fraction", cfg.merge_cfg.merge_fraction);
  if (r.has("criterion")) {
    const auto& v = r.raw("criterion");
    if (v == "js") {
      cfg.merge_cfg.criterion = MergeCriterion::kJensenShannon;
    } else if (v == "euclidean") {
      cfg.merge_cfg.criterion = MergeCriterion::kEuclidean;
    } else {
      throw FormatError("config: criterion must be js or euclidean");
    }
  }
  if (r.has("selection")) {
    const auto& v = r.raw("selection");
    if (v == "acquisition") {
      cfg.selection = SelectionPolicy::kAcquisition;
    } else if (v == "random") {
      cfg.selection = SelectionPolicy::kRandom;
    } else {
      throw FormatError("config: selection must be acquisition or random");
    }
  }
  r.read("sieve", cfg.sieve);
  r.read("sample_count", cfg.sieve_cfg.sample_count);
  r.read("min_pixels_for_knee", cfg.sieve_cfg.min_pixels_for_knee);
  r.read("budget", cfg.budget);
  r.read("rounds", cfg.rounds);
  r.read("learning_rate", cfg.train_cfg.learning_rate);
  r.read("epochs", cfg.train_cfg.epochs);
  r.read("batch_size", cfg.train_cfg.batch_size);
  r.read("seed", cfg.seed);
  if (r.has("oracle")) {
    const auto& v = r.raw("oracle");
    if (v == "simulated") {
      cfg.oracle = OracleMode::kSimulated;
    } else if (v == "human") {
      cfg.oracle = OracleMode::kHuman;
    } else {
      throw FormatError("config: oracle must be simulated or human");
    }
  }
  r.read("http_port", cfg.http_port);
  r.read("partial", cfg.partial);
  if (r.has("num_classes")) {
    std::uint32_t v = 0;
    r.read("num_classes", v);
    cfg.num_classes = v;
  }
  if (r.has("ignore_id")) {
    std::uint32_t v = 0;
    r.read("ignore_id", v);
    cfg.ignore_id = v;
  }

  if (cfg.base_algorithm == BaseAlgorithm::kImport && cfg.base_dir.empty()) {
    throw FormatError("config: base_algo = import needs base_dir");
  }
  if (cfg.budget < 1) throw FormatError("config: budget must be >= 1");
  if (cfg.sieve_cfg.sample_count < 3) throw FormatError("config: sample_count must be >= 3");
  if (!(cfg.merge_cfg.epsilon >= 0.0)) throw FormatError("config: epsilon must be >= 0");
  if (!(cfg.merge_cfg.merge_fraction > 0.0 && cfg.merge_cfg.merge_fraction <= 1.0)) {
    throw FormatError("config: merge_fraction must be in (0, 1]");
  }
  return cfg;
}

LoopConfig LoopConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_key_values(parse_key_values(buffer.str()), path.parent_path());
}

std::map<std::string, std::string> LoopConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["name"] = name;
  kv["manifest"] = manifest.string();
  kv["runs_dir"] = runs_dir.string();
  kv["base_algo"] = base_algorithm == BaseAlgorithm::kSlic ? "slic" : base_algorithm == BaseAlgorithm::kGrid ? "grid" : "import";
  if (!base_dir.empty()) kv["base_dir"] = base_dir.string();
  if (!probs_dir.empty()) kv["probs_dir"] = probs_dir.string();
  kv["base_size"] = std::to_string(slic.target_region_size);
  kv["compactness"] = format_double(slic.compactness);
  kv["slic_iters"] = std::to_string(slic.iterations);
  kv["slic_smoothing"] = std::to_string(slic.smoothing);
  kv["merge"] = merge ? "true" : "false";
  kv["epsilon"] = format_double(merge_cfg.epsilon);
  kv["merge_fraction"] = format_double(merge_cfg.merge_fraction);
  kv["criterion"] = merge_cfg.criterion == MergeCriterion::kJensenShannon ? "js" : "euclidean";
  kv["selection"] = selection == SelectionPolicy::kAcquisition ? "acquisition" : "random";
  kv["sieve"] = sieve ? "true" : "false";
  kv["sample_count"] = std::to_string(sieve_cfg.sample_count);
  kv["min_pixels_for_knee"] = std::to_string(sieve_cfg.min_pixels_for_knee);
  kv["budget"] = std::to_string(budget);
  kv["rounds"] = std::to_string(rounds);
  kv["learning_rate"] = format_double(train_cfg.learning_rate);
  kv["epochs"] = std::to_string(train_cfg.epochs);
  kv["batch_size"] = std::to_string(train_cfg.batch_size);
  kv["seed"] = std::to_string(seed);
  kv["oracle"] = oracle == OracleMode::kSimulated ? "simulated" : "human";
  kv["http_port"] = std::to_string(http_port);
  kv["partial"] = partial ? "true" : "false";
  if (num_classes) kv["num_classes"] = std::to_string(*num_classes);
  if (ignore_id) kv["ignore_id"] = std::to_string(*ignore_id);
  return kv;
}

std::string LoopConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [key, value] : to_key_values()) out << key << " = \"" << value << "\"\n";
  return out.str();
}

}  // namespace spal
