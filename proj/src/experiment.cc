// Copyright 2026 The DPDR Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpdr/experiment.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dpdr/accountant.h"
#include "dpdr/diagnostics.h"
#include "dpdr/errors.h"

namespace dpdr {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitData = 4;
constexpr int kExitPartial = 5;

// Reads the keys of one JSON object and rejects anything it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where)
      : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(Path("") + ": expected an object");
  }

  bool Has(const std::string& key) const { return obj_.contains(key); }

  const json& Required(const std::string& key) {
    if (!obj_.contains(key)) {
      throw ConfigError("missing required key '" + Path(key) + "'");
    }
    seen_.insert(key);
    return obj_.at(key);
  }

  double Number(const std::string& key) {
    const json& v = Required(key);
    if (!v.is_number()) throw ConfigError(Path(key) + ": expected a number");
    return v.get<double>();
  }

  std::int64_t Integer(const std::string& key) {
    const json& v = Required(key);
    if (!v.is_number_integer()) {
      throw ConfigError(Path(key) + ": expected an integer");
    }
    return v.get<std::int64_t>();
  }

  std::uint64_t Unsigned(const std::string& key) {
    const json& v = Required(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(Path(key) + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string String(const std::string& key) {
    const json& v = Required(key);
    if (!v.is_string()) throw ConfigError(Path(key) + ": expected a string");
    return v.get<std::string>();
  }

  ObjectReader Object(const std::string& key) {
    return ObjectReader(Required(key), Path(key));
  }

  void Finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError("unknown key '" + Path(key) + "'");
      }
    }
  }

  std::string Path(const std::string& key) const {
    if (where_.empty()) return key;
    return key.empty() ? where_ : where_ + "." + key;
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

json NumberOrNull(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string CsvCell(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return FormatDouble(v);
}

void WriteAtomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::size_t DatasetSize(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetSpec::Kind::kSynthetic:
      return spec.n;
    case DatasetSpec::Kind::kIdx: {
      std::ifstream in(spec.labels_path, std::ios::binary);
      unsigned char hdr[8];
      if (!in || !in.read(reinterpret_cast<char*>(hdr), 8)) {
        throw DataError("cannot read IDX header of " + spec.labels_path);
      }
      const std::size_t n = (std::size_t{hdr[4]} << 24) |
                            (std::size_t{hdr[5]} << 16) |
                            (std::size_t{hdr[6]} << 8) | std::size_t{hdr[7]};
      return spec.limit.has_value() ? std::min(n, *spec.limit) : n;
    }
    case DatasetSpec::Kind::kCache: {
      std::ifstream in(spec.cache_path);
      std::string line;
      if (!in || !std::getline(in, line)) {
        throw DataError("cannot read header of " + spec.cache_path);
      }
      std::stringstream ss(line);
      std::string name, n;
      std::getline(ss, name, ',');
      std::getline(ss, n, ',');
      try {
        return static_cast<std::size_t>(std::stoull(n));
      } catch (const std::exception&) {
        throw DataError(spec.cache_path + ":1: bad row count '" + n + "'");
      }
    }
  }
  return 0;
}

DatasetSpec ParseDataset(ObjectReader r) {
  DatasetSpec spec;
  const std::string kind = r.String("kind");
  if (kind == "synthetic") {
    spec.kind = DatasetSpec::Kind::kSynthetic;
    ObjectReader p = r.Object("params");
    const std::int64_t n = p.Integer("n");
    spec.d_in = static_cast<int>(p.Integer("d_in"));
    spec.n_classes = static_cast<int>(p.Integer("n_classes"));
    spec.margin = p.Number("margin");
    if (p.Has("seed")) spec.data_seed = p.Unsigned("seed");
    p.Finish();
    if (n < 1 || spec.d_in < 1 || spec.n_classes < 2 || !(spec.margin > 0) ||
        n < spec.n_classes) {
      throw ConfigError(
          "dataset.params: need n >= n_classes >= 2, d_in >= 1, margin > 0");
    }
    spec.n = static_cast<std::size_t>(n);
  } else if (kind == "idx") {
    spec.kind = DatasetSpec::Kind::kIdx;
    ObjectReader p = r.Object("path");
    spec.images_path = p.String("images");
    spec.labels_path = p.String("labels");
    p.Finish();
    if (r.Has("limit")) {
      const std::int64_t limit = r.Integer("limit");
      if (limit < 1) throw ConfigError("dataset.limit: must be >= 1");
      spec.limit = static_cast<std::size_t>(limit);
    }
  } else if (kind == "cache") {
    spec.kind = DatasetSpec::Kind::kCache;
    spec.cache_path = r.String("path");
  } else {
    throw ConfigError("dataset.kind: unknown kind '" + kind +
                      "' (expected synthetic, idx or cache)");
  }
  r.Finish();
  return spec;
}

Architecture ParseModel(ObjectReader r) {
  Architecture arch;
  const std::string kind = r.String("kind");
  if (kind == "mlp") {
    const json& hidden = r.Required("hidden");
    if (!hidden.is_array()) throw ConfigError("model.hidden: expected array");
    for (const json& h : hidden) {
      if (!h.is_number_integer() || h.get<int>() < 1) {
        throw ConfigError("model.hidden: widths must be positive integers");
      }
      arch.hidden.push_back(h.get<int>());
    }
    if (r.Has("activation")) {
      const std::string a = r.String("activation");
      if (a == "relu") {
        arch.activation = Activation::kRelu;
      } else if (a == "tanh") {
        arch.activation = Activation::kTanh;
      } else {
        throw ConfigError("model.activation: expected relu or tanh");
      }
    }
  } else if (kind != "logreg") {
    throw ConfigError("model.kind: expected logreg or mlp");
  }
  r.Finish();
  return arch;
}

json DatasetToJson(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetSpec::Kind::kSynthetic:
      return {{"kind", "synthetic"},
              {"params",
               {{"n", spec.n},
                {"d_in", spec.d_in},
                {"n_classes", spec.n_classes},
                {"margin", spec.margin},
                {"seed", spec.data_seed}}}};
    case DatasetSpec::Kind::kIdx: {
      json j = {{"kind", "idx"},
                {"path",
                 {{"images", spec.images_path}, {"labels", spec.labels_path}}}};
      if (spec.limit.has_value()) j["limit"] = *spec.limit;
      return j;
    }
    case DatasetSpec::Kind::kCache:
      return {{"kind", "cache"}, {"path", spec.cache_path}};
  }
  return {};
}

std::string Trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int Column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

std::vector<std::string> Split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double ParseCell(const std::string& cell) {
  if (cell.empty()) return std::nan("");
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  return std::stod(cell);
}

CsvTable ReadMetricsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  t.header = Split(Trim(line), ',');
  while (std::getline(in, line)) {
    line = Trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const std::string& c : Split(line, ',')) row.push_back(ParseCell(c));
    row.resize(t.header.size(), std::nan(""));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string PlotCell(double v) {
  if (std::isnan(v)) return "nan";
  return CsvCell(v);
}

void ReportCompletedRuns(std::ostream& err,
                         const std::vector<std::string>& completed) {
  err << "completed runs (" << completed.size() << "):\n";
  for (const std::string& c : completed) err << "  " << c << "\n";
}

double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double StdOf(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = MeanOf(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int CmdTrain(const std::string& config_path, std::optional<std::uint64_t> seed,
             const std::string& out_dir, bool timing, std::ostream& out) {
  ExperimentConfig config = LoadConfigFile(config_path);
  if (seed.has_value()) config.train.seed = *seed;
  RunArtifacts a = RunExperiment(config, out_dir, {timing});
  out << "wrote " << a.metrics_csv.string() << " and "
      << a.summary_json.string() << "\n";
  out << "final accuracy " << a.result.final_accuracy << ", loss "
      << a.result.final_loss;
  if (a.result.privacy.has_value()) {
    out << ", eps " << a.result.privacy->eps << " at delta "
        << config.train.delta;
  }
  out << "\n";
  return kExitOk;
}

struct CalibrateArgs {
  double eps = 0.0;
  double delta = 1e-5;
  std::int64_t n = 0;
  std::int64_t batch = 0;
  std::int64_t steps = 0;
  std::int64_t switch_step = 1;
  double sigma_alpha = 1.0;
  double ratio_g = 1.0;
};

int CmdCalibrate(const CalibrateArgs& a, std::ostream& out) {
  if (a.n < 1 || a.batch < 1 || a.batch > a.n) {
    throw ConfigError("--batch must lie in [1, --n]");
  }
  const double q = static_cast<double>(a.batch) / static_cast<double>(a.n);
  const std::vector<SchedulePhase> schedule =
      DpdrSchedule(q, a.steps, a.switch_step);
  const CalibrationResult r =
      CalibrateSigma(a.eps, a.delta, schedule, a.sigma_alpha, a.ratio_g);
  json j = {{"sigma_perp", r.sigma_perp_used ? json(r.sigma_perp) : json()},
            {"sigma_perp_used", r.sigma_perp_used},
            {"sigma_alpha", r.sigma_alpha},
            {"sigma_g", r.sigma_g},
            {"sigma_eff", r.sigma_perp_used ? json(r.sigma_eff) : json()},
            {"eps", r.achieved.eps},
            {"order", r.achieved.order},
            {"delta", a.delta},
            {"q", q}};
  out << j.dump() << "\n";
  return kExitOk;
}

int CmdCompare(const std::vector<std::string>& configs, int seeds,
               const std::string& out_dir, std::optional<double> target_loss,
               std::ostream& out, std::ostream& err) {
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");
  std::vector<ExperimentConfig> parsed;
  for (const std::string& path : configs) parsed.push_back(LoadConfigFile(path));

  struct Row {
    std::size_t config_index;
    std::string method;
    std::uint64_t seed;
    double accuracy;
    double loss;
    std::vector<MetricsRow> metrics;
    std::optional<double> eps;
    std::int64_t total_steps;
  };
  std::vector<Row> rows;
  std::vector<std::string> completed;
  fs::create_directories(out_dir);
  for (std::size_t c = 0; c < parsed.size(); ++c) {
    const std::string stem =
        std::to_string(c) + "_" + fs::path(configs[c]).stem().string();
    for (int k = 1; k <= seeds; ++k) {
      ExperimentConfig cfg = parsed[c];
      cfg.train.seed = static_cast<std::uint64_t>(k);
      const fs::path dir = fs::path(out_dir) / stem / ("seed_" + std::to_string(k));
      try {
        RunArtifacts a = RunExperiment(cfg, dir);
        std::optional<double> eps;
        if (a.result.privacy.has_value()) eps = a.result.privacy->eps;
        rows.push_back({c, MethodName(cfg.train.method), cfg.train.seed,
                        a.result.final_accuracy, a.result.final_loss,
                        std::move(a.result.metrics), eps,
                        cfg.train.total_steps});
        completed.push_back(dir.string());
      } catch (const std::exception& e) {
        err << "run " << dir.string() << " failed: " << e.what() << "\n";
        ReportCompletedRuns(err, completed);
        return kExitPartial;
      }
    }
  }

  double target = 0.0;
  if (target_loss.has_value()) {
    target = *target_loss;
  } else {
    std::vector<double> first_losses;
    for (const Row& r : rows) {
      if (r.config_index == 0) first_losses.push_back(r.loss);
    }
    target = MeanOf(first_losses);
  }

  std::ostringstream csv;
  csv << "method,seed,final_accuracy,steps_to_target_loss,eps\n";
  std::map<std::size_t, std::vector<double>> acc, steps, eps;
  for (const Row& r : rows) {
    const std::optional<std::int64_t> s = StepsToTargetLoss(r.metrics, target);
    csv << r.method << ',' << r.seed << ',' << FormatDouble(r.accuracy) << ','
        << (s.has_value() ? *s : -1) << ','
        << (r.eps.has_value() ? CsvCell(*r.eps) : "") << '\n';
    acc[r.config_index].push_back(r.accuracy);
    steps[r.config_index].push_back(
        static_cast<double>(s.has_value() ? *s : r.total_steps + 1));
    if (r.eps.has_value()) eps[r.config_index].push_back(*r.eps);
  }
  WriteAtomic(fs::path(out_dir) / "comparison.csv", csv.str());

  out << "target loss " << FormatDouble(target) << "\n";
  out << std::left << std::setw(28) << "config" << std::setw(8) << "method"
      << std::setw(24) << "final_accuracy" << std::setw(24)
      << "steps_to_target" << "eps\n";
  for (std::size_t c = 0; c < parsed.size(); ++c) {
    std::ostringstream a, s;
    a << std::fixed << std::setprecision(4) << MeanOf(acc[c]) << " +- "
      << StdOf(acc[c]);
    s << std::fixed << std::setprecision(1) << MeanOf(steps[c]) << " +- "
      << StdOf(steps[c]);
    out << std::left << std::setw(28) << fs::path(configs[c]).stem().string()
        << std::setw(8) << MethodName(parsed[c].train.method) << std::setw(24)
        << a.str() << std::setw(24) << s.str();
    if (eps[c].empty()) {
      out << "-";
    } else {
      out << std::setprecision(4) << MeanOf(eps[c]);
    }
    out << "\n";
  }
  return kExitOk;
}

int CmdPlotData(const std::string& metrics_path, const std::string& kind,
                const std::string& out_path, int bins, std::ostream& out,
                std::ostream& err) {
  std::ostringstream data;
  if (kind == "hist-perp") {
    const fs::path snap = fs::path(metrics_path).parent_path() /
                          "perp_snapshot.txt";
    std::ifstream in(snap);
    if (!in) {
      err << "no per-sample orthogonal-norm snapshot at " << snap.string()
          << " (only runs with GDR steps record one)\n";
      return kExitConfig;
    }
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
      line = Trim(line);
      if (!line.empty() && line[0] != '#') values.push_back(std::stod(line));
    }
    if (values.empty()) {
      err << snap.string() << " is empty\n";
      return kExitConfig;
    }
    data << "# edge count\n";
    for (const HistogramBin& b : Histogram(values, bins)) {
      data << PlotCell(b.edge) << ' ' << b.count << '\n';
    }
  } else {
    std::vector<std::string> columns;
    if (kind == "norms") {
      columns = {"step", "grad_norm_median", "perp_norm_median",
                 "diff_norm_median"};
    } else if (kind == "convergence") {
      columns = {"eps_cum", "train_accuracy"};
    } else {
      err << "unknown plot kind '" << kind
          << "' (expected norms, convergence or hist-perp)\n";
      return kExitConfig;
    }
    const CsvTable t = ReadMetricsCsv(metrics_path);
    std::vector<int> idx;
    for (const std::string& c : columns) {
      const int i = t.Column(c);
      if (i < 0) {
        err << metrics_path << ": missing column '" << c << "'\n";
        return kExitConfig;
      }
      idx.push_back(i);
    }
    data << "#";
    for (const std::string& c : columns) data << ' ' << c;
    data << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t j = 0; j < idx.size(); ++j) {
        data << (j ? " " : "") << PlotCell(row[idx[j]]);
      }
      data << '\n';
    }
  }
  WriteAtomic(out_path, data.str());
  out << "wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

ExperimentConfig ParseConfig(const json& doc) {
  ObjectReader r(doc, "");
  ExperimentConfig cfg;
  TrainConfig& t = cfg.train;
  t.method = ParseMethod(r.String("method"));
  t.total_steps = r.Integer("total_steps");
  t.switch_step = t.total_steps;
  if (r.Has("switch_step")) t.switch_step = r.Integer("switch_step");
  else if (t.method == Method::kDpdr) r.Required("switch_step");
  t.batch = r.Integer("batch");
  t.lr = r.Number("lr");
  t.seed = r.Unsigned("seed");

  const bool is_private = t.method != Method::kSgd;
  if (r.Has("clip") || is_private) {
    ObjectReader c = r.Object("clip");
    t.clip = {c.Number("c_g"), c.Number("c_perp"), c.Number("c_alpha")};
    c.Finish();
  }
  if (r.Has("noise") && r.Has("privacy")) {
    throw ConfigError("give either 'noise' or 'privacy', not both");
  }
  if (r.Has("noise")) {
    ObjectReader n = r.Object("noise");
    t.noise = {n.Number("sigma_g"), n.Number("sigma_perp"),
               n.Number("sigma_alpha")};
    if (n.Has("delta")) t.delta = n.Number("delta");
    n.Finish();
  } else if (r.Has("privacy")) {
    ObjectReader p = r.Object("privacy");
    PrivacyTarget target;
    target.eps = p.Number("eps");
    target.delta = p.Number("delta");
    target.sigma_alpha = p.Number("sigma_alpha");
    if (p.Has("ratio_g")) target.ratio_g = p.Number("ratio_g");
    p.Finish();
    if (!(target.eps > 0) || !(target.delta > 0 && target.delta < 1) ||
        !(target.sigma_alpha > 0) || !(target.ratio_g > 0)) {
      throw ConfigError(
          "privacy: need eps > 0, 0 < delta < 1, sigma_alpha > 0, ratio_g > 0");
    }
    t.delta = target.delta;
    t.privacy = target;
  } else if (is_private) {
    throw ConfigError("private methods need a 'noise' or 'privacy' block");
  }
  cfg.dataset = ParseDataset(r.Object("dataset"));
  if (r.Has("model")) t.arch = ParseModel(r.Object("model"));
  r.Finish();

  if (t.total_steps < 1) throw ConfigError("total_steps: must be >= 1");
  if (t.batch < 1) throw ConfigError("batch: must be >= 1");
  if (!(t.lr > 0)) throw ConfigError("lr: must be > 0");
  if (t.method == Method::kDpdr &&
      (t.switch_step < 1 || t.switch_step > t.total_steps)) {
    throw ConfigError("switch_step: must lie in [1, total_steps]");
  }
  try {
    t.clip.Validate();
    t.noise.Validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("clip/noise: ") + e.what());
  }
  if (!(t.delta > 0 && t.delta < 1)) throw ConfigError("noise.delta: bad");
  return cfg;
}

ExperimentConfig ParseConfigText(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return ParseConfig(doc);
}

ExperimentConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseConfigText(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json ConfigToJson(const ExperimentConfig& config) {
  const TrainConfig& t = config.train;
  json j = {{"method", MethodName(t.method)},
            {"total_steps", t.total_steps},
            {"switch_step", t.switch_step},
            {"batch", t.batch},
            {"lr", t.lr},
            {"seed", t.seed},
            {"clip",
             {{"c_g", t.clip.c_g},
              {"c_perp", t.clip.c_perp},
              {"c_alpha", t.clip.c_alpha}}},
            {"dataset", DatasetToJson(config.dataset)}};
  if (t.privacy.has_value()) {
    j["privacy"] = {{"eps", t.privacy->eps},
                    {"delta", t.privacy->delta},
                    {"sigma_alpha", t.privacy->sigma_alpha},
                    {"ratio_g", t.privacy->ratio_g}};
  } else {
    j["noise"] = {{"sigma_g", t.noise.sigma_g},
                  {"sigma_perp", t.noise.sigma_perp},
                  {"sigma_alpha", t.noise.sigma_alpha},
                  {"delta", t.delta}};
  }
  if (t.arch.hidden.empty()) {
    j["model"] = {{"kind", "logreg"}};
  } else {
    j["model"] = {{"kind", "mlp"},
                  {"hidden", t.arch.hidden},
                  {"activation",
                   t.arch.activation == Activation::kRelu ? "relu" : "tanh"}};
  }
  return j;
}

Dataset LoadDataset(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetSpec::Kind::kSynthetic:
      return GenSynthetic(spec.n, spec.d_in, spec.n_classes, spec.margin,
                          spec.data_seed);
    case DatasetSpec::Kind::kIdx:
      return LoadIdxPair(spec.images_path, spec.labels_path, spec.limit);
    case DatasetSpec::Kind::kCache:
      return LoadCache(spec.cache_path);
  }
  throw DataError("unknown dataset kind");
}

std::string MetricsCsv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows) {
    out << r.step << ',' << CsvCell(r.train_loss) << ','
        << CsvCell(r.train_accuracy) << ',' << CsvCell(r.grad_norm_median)
        << ',' << CsvCell(r.perp_norm_median) << ','
        << CsvCell(r.diff_norm_median) << ',' << CsvCell(r.alpha_vec_norm)
        << ',' << CsvCell(r.cos_prev) << ',' << CsvCell(r.eps_cum) << ','
        << CsvCell(r.wall_ms) << '\n';
  }
  return out.str();
}

std::optional<std::int64_t> StepsToTargetLoss(
    const std::vector<MetricsRow>& rows, double target) {
  double window_sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    window_sum += rows[i].train_loss;
    if (i >= static_cast<std::size_t>(kLossWindow)) {
      window_sum -= rows[i - kLossWindow].train_loss;
    }
    const std::size_t width = std::min<std::size_t>(i + 1, kLossWindow);
    if (window_sum / static_cast<double>(width) < target) return rows[i].step;
  }
  return std::nullopt;
}

RunArtifacts RunExperiment(const ExperimentConfig& config_in,
                           const fs::path& out_dir,
                           const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig config = config_in;
  TrainConfig& t = config.train;

  // Calibrate from the dataset size alone so an infeasible budget fails
  // before any example is read.
  const std::size_t n = DatasetSize(config.dataset);
  if (n == 0) throw DataError("dataset is empty");
  std::optional<CalibrationResult> calibration;
  if (t.privacy.has_value() && t.method != Method::kSgd) {
    if (t.batch > static_cast<std::int64_t>(n)) {
      throw ConfigError("batch: exceeds dataset size");
    }
    t.noise = ResolveNoise(t, n, &calibration);
  }
  t.privacy.reset();

  const Dataset dataset = LoadDataset(config.dataset);
  t.arch.d_in = dataset.d_in();
  t.arch.n_classes = dataset.n_classes();

  RunArtifacts a{{}, {}, {}, {}, Train(t, dataset, {options.record_timing, false})};

  json resolved = {{"sigma_g", t.noise.sigma_g},
                   {"sigma_perp", t.noise.sigma_perp},
                   {"sigma_alpha", t.noise.sigma_alpha},
                   {"sigma_eff", nullptr}};
  if (t.noise.sigma_perp > 0 && t.noise.sigma_alpha > 0) {
    resolved["sigma_eff"] =
        EffectiveSigma(t.noise.sigma_perp, t.noise.sigma_alpha);
  }
  json privacy = {{"eps", nullptr}, {"delta", t.delta}, {"order", nullptr}};
  if (a.result.privacy.has_value()) {
    privacy["eps"] = NumberOrNull(a.result.privacy->eps);
    privacy["order"] = a.result.privacy->order;
  }
  const double runtime_ms =
      options.record_timing
          ? std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - t0)
                .count()
          : 0.0;
  a.summary = {{"config", ConfigToJson(config)},
               {"resolved_noise", resolved},
               {"final",
                {{"loss", NumberOrNull(a.result.final_loss)},
                 {"accuracy", a.result.final_accuracy}}},
               {"privacy", privacy},
               {"phase_steps",
                {{"first", a.result.phases.first},
                 {"gdr", a.result.phases.gdr},
                 {"dpsgd", a.result.phases.dpsgd}}},
               {"seed", t.seed},
               {"runtime_ms", runtime_ms}};

  fs::create_directories(out_dir);
  a.metrics_csv = out_dir / "metrics.csv";
  a.summary_json = out_dir / "summary.json";
  WriteAtomic(a.metrics_csv, MetricsCsv(a.result.metrics));
  WriteAtomic(a.summary_json, a.summary.dump(2) + "\n");
  if (!a.result.perp_snapshot.empty()) {
    a.perp_snapshot = out_dir / "perp_snapshot.txt";
    std::ostringstream snap;
    snap << "# per-sample orthogonal norms, last GDR step\n";
    for (double v : a.result.perp_snapshot) snap << FormatDouble(v) << '\n';
    WriteAtomic(a.perp_snapshot, snap.str());
  }
  return a;
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Differentially private training lab: DP-SGD, DIFF, DPDR"};
  app.require_subcommand(1);

  std::string config_path, train_out = "run";
  std::optional<std::uint64_t> seed;
  bool timing = false;
  CLI::App* train = app.add_subcommand("train", "Run one configured experiment");
  train->add_option("--config", config_path, "JSON config")->required();
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--out", train_out, "Output directory");
  train->add_flag("--record-timing", timing,
                  "Record wall-clock times (breaks byte reproducibility)");

  CalibrateArgs cal;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Calibrate DPDR noise multipliers");
  calibrate->add_option("--eps", cal.eps)->required();
  calibrate->add_option("--delta", cal.delta)->required();
  calibrate->add_option("--n", cal.n, "Dataset size")->required();
  calibrate->add_option("--batch", cal.batch, "Expected batch")->required();
  calibrate->add_option("--steps", cal.steps, "Total steps")->required();
  calibrate->add_option("--switch", cal.switch_step, "Switch step")
      ->required();
  calibrate->add_option("--sigma-alpha", cal.sigma_alpha)->required();
  calibrate->add_option("--ratio-g", cal.ratio_g);

  std::vector<std::string> compare_configs;
  int seeds = 1;
  std::string compare_out = "compare";
  std::optional<double> target_loss;
  CLI::App* compare =
      app.add_subcommand("compare", "Run configs over seeds and compare");
  compare->add_option("--configs", compare_configs)->required();
  compare->add_option("--seeds", seeds)->required();
  compare->add_option("--out", compare_out)->required();
  compare->add_option("--target-loss", target_loss,
                      "Default: mean final loss of the first config");

  std::string metrics_path, kind, plot_out;
  int bins = 20;
  CLI::App* plot = app.add_subcommand("plot-data", "Emit plot-ready data");
  plot->add_option("--metrics", metrics_path)->required();
  plot->add_option("--kind", kind)->required();
  plot->add_option("--out", plot_out)->required();
  plot->add_option("--bins", bins);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*train) return CmdTrain(config_path, seed, train_out, timing, out);
    if (*calibrate) return CmdCalibrate(cal, out);
    if (*compare) {
      return CmdCompare(compare_configs, seeds, compare_out, target_loss, out,
                        err);
    }
    if (*plot) return CmdPlotData(metrics_path, kind, plot_out, bins, out, err);
  } catch (const InfeasibleBudget& e) {
    err << "infeasible privacy budget: " << e.what()
        << " (sigma_alpha-only lower bound eps = " << e.lower_bound_eps()
        << ")\n";
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "dataset error: " << e.what() << "\n";
    return kExitData;
  } catch (const ContractViolation& e) {
    err << "invalid parameters: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace dpdr
