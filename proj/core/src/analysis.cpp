#include "rotorvib/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "rotorvib/error.hpp"

namespace rotorvib {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& x, std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(cols[i]));
  }
  return out;
}

// Split, scaler and scaled matrices shared by every scenario of one study.
struct Prepared {
  Prepared(const Dataset& ds, const StudyConfig& config)
      : split(stratified_split(ds, config.train_fraction, config.seed, config.split_mode)),
        scaler(fit_scaler(TrainingRows(ds, split))),
        train(scaler.apply(TrainingRows(ds, split))) {
    test = scaler.apply(ds.select_rows(split.test).features);
    for (std::size_t r : split.test) test_labels.push_back(ds.labels[r]);
  }

  SplitIndices split;
  ScalerParams scaler;
  TrainingRows train;
  Eigen::MatrixXd test;
  std::vector<int> test_labels;
};

ScenarioResult evaluate(ScenarioKind kind, std::optional<FeatureFamily> family, std::optional<std::size_t> k,
                        Algorithm algorithm, const Eigen::MatrixXd& x_train, std::span<const int> y_train,
                        const Eigen::MatrixXd& x_test, std::span<const int> y_test, const StudyConfig& config,
                        double setup_ms) {
  const auto start = Clock::now();
  const TrainedModel model = train_model(algorithm, x_train, y_train, config.models);
  const double acc = accuracy(predict(model, x_test), y_test);
  return ScenarioResult{kind, family, k, algorithm, acc, static_cast<std::size_t>(x_train.cols()), config.seed,
                        setup_ms + elapsed_ms(start)};
}

std::vector<std::size_t> pca_mask(const FeatureSchema& schema, PcaTarget target) {
  if (target == PcaTarget::All) return all_columns(schema.size());
  auto cols = schema.columns_of(FeatureFamily::Stft);
  if (cols.empty()) throw Error(ErrorCode::EmptyMask, "no STFT columns to project");
  return cols;
}

std::size_t rank_cap(const Prepared& p, std::size_t masked) { return std::min(p.train.rows() - 1, masked); }

template <class Enum, std::size_t N>
std::size_t index_of(const std::array<Enum, N>& values, Enum v) {
  return static_cast<std::size_t>(std::find(values.begin(), values.end(), v) - values.begin());
}

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void reject_unknown(const json& doc, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigInvalid, std::string(where) + " must be a JSON object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, value] : doc.items()) {
    if (!keys.contains(key)) throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "' in " + std::string(where));
  }
}

std::vector<std::string> family_names(std::span<const FeatureFamily> families) {
  std::vector<std::string> out;
  for (auto f : families) out.emplace_back(short_label(f));
  return out;
}

std::vector<FeatureFamily> parse_families(const json& doc) {
  std::vector<FeatureFamily> out;
  for (const auto& f : doc) out.push_back(parse_feature_family(f.get<std::string>()));
  return out;
}

std::vector<std::string> algorithm_names(std::span<const Algorithm> algorithms) {
  std::vector<std::string> out;
  for (auto a : algorithms) out.emplace_back(to_string(a));
  return out;
}

json scenario_to_json(const ScenarioResult& r) {
  return {{"id", to_string(r.kind)},
          {"family", r.family ? json(short_label(*r.family)) : json(nullptr)},
          {"k", optional_json(r.k)},
          {"algorithm", to_string(r.algorithm)},
          {"accuracy", r.accuracy},
          {"columns", r.columns},
          {"seed", r.seed},
          {"duration_ms", r.duration_ms}};
}

ScenarioResult scenario_from_json(const json& doc) {
  ScenarioResult r;
  const auto id = doc.at("id").get<std::string>();
  bool known = false;
  for (auto kind : {ScenarioKind::NoPca, ScenarioKind::StftPca, ScenarioKind::AllPca, ScenarioKind::Isolation}) {
    if (id == to_string(kind)) {
      r.kind = kind;
      known = true;
    }
  }
  if (!known) throw Error(ErrorCode::ConfigInvalid, "unknown scenario id '" + id + "'");
  if (!doc.at("family").is_null()) r.family = parse_feature_family(doc["family"].get<std::string>());
  if (!doc.at("k").is_null()) r.k = doc["k"].get<std::size_t>();
  r.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
  r.accuracy = doc.at("accuracy").get<double>();
  r.columns = doc.at("columns").get<std::size_t>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.duration_ms = doc.at("duration_ms").get<double>();
  return r;
}

json aggregate_to_json(const ImportanceAggregate& a) {
  json top = json::array();
  for (const auto& f : a.top) {
    top.push_back({{"name", f.name},
                   {"family", short_label(f.family)},
                   {"axis", to_string(f.axis)},
                   {"importance", f.importance}});
  }
  json families = json::array();
  for (std::size_t i = 0; i < kImportanceFamilies.size(); ++i) {
    families.push_back({{"family", short_label(kImportanceFamilies[i])},
                        {"top_count", a.family_counts[i]},
                        {"importance", a.family_importance[i]},
                        {"top_importance", a.top_family_importance[i]}});
  }
  json axes = json::array();
  for (std::size_t i = 0; i < kAxes.size(); ++i) {
    axes.push_back({{"axis", to_string(kAxes[i])},
                    {"top_count", a.axis_counts[i]},
                    {"importance", a.axis_importance[i]},
                    {"top_importance", a.top_axis_importance[i]}});
  }
  return {{"top", std::move(top)}, {"families", std::move(families)}, {"axes", std::move(axes)}};
}

Axis parse_axis(std::string_view s) {
  for (auto a : kAxes) {
    if (s == to_string(a)) return a;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown axis '" + std::string(s) + "'");
}

ImportanceAggregate aggregate_from_json(const json& doc) {
  ImportanceAggregate a;
  for (const auto& f : doc.at("top")) {
    a.top.push_back({f.at("name").get<std::string>(), parse_feature_family(f.at("family").get<std::string>()),
                     parse_axis(f.at("axis").get<std::string>()), f.at("importance").get<double>()});
  }
  for (const auto& f : doc.at("families")) {
    const auto i = index_of(kImportanceFamilies, parse_feature_family(f.at("family").get<std::string>()));
    a.family_counts[i] = f.at("top_count").get<std::size_t>();
    a.family_importance[i] = f.at("importance").get<double>();
    a.top_family_importance[i] = f.at("top_importance").get<double>();
  }
  for (const auto& f : doc.at("axes")) {
    const auto i = index_of(kAxes, parse_axis(f.at("axis").get<std::string>()));
    a.axis_counts[i] = f.at("top_count").get<std::size_t>();
    a.axis_importance[i] = f.at("importance").get<double>();
    a.top_axis_importance[i] = f.at("top_importance").get<double>();
  }
  return a;
}

std::string csv_number(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::string_view to_string(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::NoPca: return "no_pca";
    case ScenarioKind::StftPca: return "stft_pca";
    case ScenarioKind::AllPca: return "all_pca";
    case ScenarioKind::Isolation: return "isolation";
  }
  return "no_pca";
}

std::string_view to_string(PcaTarget target) noexcept {
  switch (target) {
    case PcaTarget::None: return "none";
    case PcaTarget::Stft: return "stft";
    case PcaTarget::All: return "all";
  }
  return "none";
}

PcaTarget parse_pca_target(std::string_view text) {
  for (auto t : {PcaTarget::None, PcaTarget::Stft, PcaTarget::All}) {
    if (text == to_string(t)) return t;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown pca target '" + std::string(text) + "' (expected none, stft, all)");
}

std::string_view to_string(SplitMode mode) noexcept {
  return mode == SplitMode::Row ? "row" : "experiment";
}

SplitMode parse_split_mode(std::string_view text) {
  if (text == "row") return SplitMode::Row;
  if (text == "experiment") return SplitMode::GroupByExperiment;
  throw Error(ErrorCode::ConfigInvalid, "unknown split mode '" + std::string(text) + "' (expected row, experiment)");
}

void StudyConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "train fraction must lie in (0, 1)");
  }
  if (algorithms.empty()) throw Error(ErrorCode::ConfigInvalid, "at least one algorithm is required");
  if (std::find(pca_ks.begin(), pca_ks.end(), std::size_t{0}) != pca_ks.end()) {
    throw Error(ErrorCode::ConfigInvalid, "pca k values must be positive");
  }
  if (sweep_k_min < 1 || sweep_k_min > sweep_k_max) throw Error(ErrorCode::ConfigInvalid, "sweep needs 1 <= k_min <= k_max");
  if (sweep_target == PcaTarget::None) throw Error(ErrorCode::ConfigInvalid, "sweep target must be stft or all");
  if (top_k < 1) throw Error(ErrorCode::ConfigInvalid, "top_k must be positive");
}

json study_config_to_json(const StudyConfig& c) {
  return {{"train_fraction", c.train_fraction},
          {"seed", c.seed},
          {"split_mode", to_string(c.split_mode)},
          {"algorithms", algorithm_names(c.algorithms)},
          {"pca_ks", c.pca_ks},
          {"sweep", {{"algorithm", to_string(c.sweep_algorithm)},
                     {"k_min", c.sweep_k_min},
                     {"k_max", c.sweep_k_max},
                     {"target", to_string(c.sweep_target)}}},
          {"isolation_families", family_names(c.isolation_families)},
          {"top_k", c.top_k},
          {"hyperparameters", model_config_to_json(c.models)}};
}

StudyConfig study_config_from_json(const json& doc) {
  StudyConfig c;
  try {
    reject_unknown(doc, {"train_fraction", "seed", "split_mode", "algorithms", "pca_ks", "sweep", "isolation_families",
                         "top_k", "hyperparameters"},
                   "study config");
    c.train_fraction = doc.value("train_fraction", c.train_fraction);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("split_mode")) c.split_mode = parse_split_mode(doc["split_mode"].get<std::string>());
    if (doc.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : doc["algorithms"]) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    c.pca_ks = doc.value("pca_ks", c.pca_ks);
    if (doc.contains("sweep")) {
      const auto& s = doc["sweep"];
      reject_unknown(s, {"algorithm", "k_min", "k_max", "target"}, "sweep");
      if (s.contains("algorithm")) c.sweep_algorithm = parse_algorithm(s["algorithm"].get<std::string>());
      c.sweep_k_min = s.value("k_min", c.sweep_k_min);
      c.sweep_k_max = s.value("k_max", c.sweep_k_max);
      if (s.contains("target")) c.sweep_target = parse_pca_target(s["target"].get<std::string>());
    }
    if (doc.contains("isolation_families")) c.isolation_families = parse_families(doc["isolation_families"]);
    c.top_k = doc.value("top_k", c.top_k);
    if (doc.contains("hyperparameters")) c.models = model_config_from_json(doc["hyperparameters"]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("study config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<ScenarioResult> run_pca_scenarios(const Dataset& dataset, const StudyConfig& config) {
  config.validate();
  const Prepared p(dataset, config);
  const auto& x = p.train.matrix();
  const auto& y = p.train.labels();
  std::vector<ScenarioResult> out;
  for (Algorithm a : config.algorithms) {
    out.push_back(evaluate(ScenarioKind::NoPca, std::nullopt, std::nullopt, a, x, y, p.test, p.test_labels, config, 0.0));
  }
  for (auto [kind, target] : {std::pair{ScenarioKind::StftPca, PcaTarget::Stft}, std::pair{ScenarioKind::AllPca, PcaTarget::All}}) {
    const auto mask = pca_mask(dataset.schema, target);
    const std::size_t k_max = *std::max_element(config.pca_ks.begin(), config.pca_ks.end());
    if (k_max > rank_cap(p, mask.size())) {
      throw Error(ErrorCode::KTooLarge, "pca k=" + std::to_string(k_max) + " exceeds the rank bound " +
                                            std::to_string(rank_cap(p, mask.size())));
    }
    auto start = Clock::now();
    const PcaModel full = fit_pca(p.train, k_max, mask);
    const double fit_ms = elapsed_ms(start);
    for (std::size_t k : config.pca_ks) {
      start = Clock::now();
      const PcaModel pca = full.truncated(k);
      const Eigen::MatrixXd xt = pca.transform(x);
      const Eigen::MatrixXd xs = pca.transform(p.test);
      const double setup = fit_ms + elapsed_ms(start);
      for (Algorithm a : config.algorithms) {
        out.push_back(evaluate(kind, std::nullopt, k, a, xt, y, xs, p.test_labels, config, setup));
      }
    }
  }
  return out;
}

SweepResult pca_component_sweep(const Dataset& dataset, const StudyConfig& config) {
  config.validate();
  const Prepared p(dataset, config);
  const auto mask = pca_mask(dataset.schema, config.sweep_target);
  if (config.sweep_k_max > rank_cap(p, mask.size())) {
    throw Error(ErrorCode::KTooLarge, "sweep k_max=" + std::to_string(config.sweep_k_max) + " exceeds the rank bound " +
                                          std::to_string(rank_cap(p, mask.size())));
  }
  const auto kind = config.sweep_target == PcaTarget::Stft ? ScenarioKind::StftPca : ScenarioKind::AllPca;
  auto start = Clock::now();
  const PcaModel full = fit_pca(p.train, config.sweep_k_max, mask);
  const double fit_ms = elapsed_ms(start);
  SweepResult out;
  double best = -1.0;
  for (std::size_t k = config.sweep_k_min; k <= config.sweep_k_max; ++k) {
    start = Clock::now();
    const PcaModel pca = full.truncated(k);
    const Eigen::MatrixXd xt = pca.transform(p.train.matrix());
    const Eigen::MatrixXd xs = pca.transform(p.test);
    out.results.push_back(evaluate(kind, std::nullopt, k, config.sweep_algorithm, xt, p.train.labels(), xs,
                                   p.test_labels, config, fit_ms + elapsed_ms(start)));
    if (out.results.back().accuracy > best) {
      best = out.results.back().accuracy;
      out.best_k = k;
    }
  }
  return out;
}

std::vector<ScenarioResult> run_feature_isolation(const Dataset& dataset, const StudyConfig& config) {
  config.validate();
  const Prepared p(dataset, config);
  const auto& y = p.train.labels();
  std::vector<ScenarioResult> out;
  for (FeatureFamily family : config.isolation_families) {
    const auto cols = dataset.schema.columns_of(family);
    if (cols.empty()) {
      throw Error(ErrorCode::UnknownFamily,
                  "family " + std::string(to_string(family)) + " is not present in the dataset schema");
    }
    const Eigen::MatrixXd xt = gather_columns(p.train.matrix(), cols);
    const Eigen::MatrixXd xs = gather_columns(p.test, cols);
    for (Algorithm a : config.algorithms) {
      out.push_back(evaluate(ScenarioKind::Isolation, family, std::nullopt, a, xt, y, xs, p.test_labels, config, 0.0));
    }
    std::vector<std::size_t> ks;
    for (std::size_t k : config.pca_ks) ks.push_back(std::min(k, rank_cap(p, cols.size())));
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty()) continue;
    auto start = Clock::now();
    const PcaModel full = fit_pca(p.train, ks.back(), cols);
    const double fit_ms = elapsed_ms(start);
    for (std::size_t k : ks) {
      start = Clock::now();
      const PcaModel pca = full.truncated(k);
      // Projected columns come last; keep only those.
      const Eigen::MatrixXd pt = pca.transform(p.train.matrix()).rightCols(static_cast<Eigen::Index>(k));
      const Eigen::MatrixXd ps = pca.transform(p.test).rightCols(static_cast<Eigen::Index>(k));
      const double setup = fit_ms + elapsed_ms(start);
      for (Algorithm a : config.algorithms) {
        out.push_back(evaluate(ScenarioKind::Isolation, family, k, a, pt, y, ps, p.test_labels, config, setup));
      }
    }
  }
  return out;
}

double best_accuracy(std::span<const ScenarioResult> results, FeatureFamily family) {
  double best = -1.0;
  for (const auto& r : results) {
    if (r.kind == ScenarioKind::Isolation && r.family == family) best = std::max(best, r.accuracy);
  }
  if (best < 0.0) throw Error(ErrorCode::Empty, "no isolation results for " + std::string(to_string(family)));
  return best;
}

ImportanceAggregate aggregate_importance(const TrainedModel& model, const FeatureSchema& schema, std::size_t top_k,
                                         const PcaModel* pca) {
  if (pca != nullptr) throw Error(ErrorCode::PcaModelRejected, "importance needs a model trained without pca");
  const auto importance = gini_importance(model);
  for (const auto& d : schema.descriptors()) {
    if (d.name.rfind("pc_", 0) == 0) {
      throw Error(ErrorCode::PcaModelRejected, "schema contains projected column " + d.name);
    }
  }
  if (importance.size() != schema.size()) {
    throw Error(ErrorCode::SchemaMismatch, "model has " + std::to_string(importance.size()) + " features, schema " +
                                               std::to_string(schema.size()));
  }
  if (top_k < 1 || top_k > schema.size()) throw Error(ErrorCode::InvalidArgument, "top_k outside [1, feature count]");

  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });

  ImportanceAggregate out;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    out.family_importance[index_of(kImportanceFamilies, schema[c].family)] += importance[c];
    out.axis_importance[index_of(kAxes, schema[c].axis)] += importance[c];
  }
  for (std::size_t i = 0; i < top_k; ++i) {
    const auto& d = schema[order[i]];
    const double v = importance[order[i]];
    out.top.push_back({d.name, d.family, d.axis, v});
    const auto f = index_of(kImportanceFamilies, d.family);
    const auto a = index_of(kAxes, d.axis);
    ++out.family_counts[f];
    out.top_family_importance[f] += v;
    ++out.axis_counts[a];
    out.top_axis_importance[a] += v;
  }
  return out;
}

std::vector<ImportanceEntry> run_importance_study(const Dataset& dataset, const StudyConfig& config) {
  config.validate();
  std::vector<Algorithm> trees;
  for (Algorithm a : config.algorithms) {
    if (a == Algorithm::DecisionTree || a == Algorithm::RandomForest) trees.push_back(a);
  }
  if (trees.empty()) throw Error(ErrorCode::NotTreeBased, "importance study needs dt or rf among the algorithms");
  const Prepared p(dataset, config);
  std::vector<ImportanceEntry> out;
  for (Algorithm a : trees) {
    const TrainedModel model = train_model(a, p.train.matrix(), p.train.labels(), config.models);
    const double acc = accuracy(predict(model, p.test), p.test_labels);
    out.push_back({a, acc, aggregate_importance(model, dataset.schema, std::min(config.top_k, dataset.cols()))});
  }
  return out;
}

std::string_view to_string(StudyKind kind) noexcept {
  switch (kind) {
    case StudyKind::PcaScenarios: return "pca-scenarios";
    case StudyKind::PcaSweep: return "pca-sweep";
    case StudyKind::Isolation: return "isolation";
    case StudyKind::Importance: return "importance";
  }
  return "pca-scenarios";
}

StudyKind parse_study_kind(std::string_view text) {
  for (auto k : {StudyKind::PcaScenarios, StudyKind::PcaSweep, StudyKind::Isolation, StudyKind::Importance}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorCode::ConfigInvalid,
              "unknown study '" + std::string(text) + "' (expected pca-scenarios, pca-sweep, isolation, importance)");
}

StudyReport run_study(StudyKind kind, const Dataset& dataset, const StudyConfig& config) {
  StudyReport report;
  report.study = kind;
  report.config = config;
  report.schema_fingerprint = dataset.schema.fingerprint();
  switch (kind) {
    case StudyKind::PcaScenarios: report.scenarios = run_pca_scenarios(dataset, config); break;
    case StudyKind::PcaSweep: {
      auto sweep = pca_component_sweep(dataset, config);
      report.scenarios = std::move(sweep.results);
      report.best_k = sweep.best_k;
      break;
    }
    case StudyKind::Isolation: report.scenarios = run_feature_isolation(dataset, config); break;
    case StudyKind::Importance: report.importance = run_importance_study(dataset, config); break;
  }
  return report;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::ConfigInvalid, "unknown format '" + std::string(text) + "' (expected json, csv)");
}

json report_to_json(const StudyReport& report) {
  json scenarios = json::array();
  for (const auto& s : report.scenarios) scenarios.push_back(scenario_to_json(s));
  json importance = json::object();
  for (const auto& e : report.importance) {
    json entry = aggregate_to_json(e.aggregate);
    entry["accuracy"] = e.accuracy;
    importance[std::string(to_string(e.algorithm))] = std::move(entry);
  }
  return {{"study", to_string(report.study)},
          {"schema_fingerprint", report.schema_fingerprint},
          {"config", study_config_to_json(report.config)},
          {"scenarios", std::move(scenarios)},
          {"best_k", optional_json(report.best_k)},
          {"importance", std::move(importance)}};
}

StudyReport report_from_json(const json& doc) {
  try {
    StudyReport r;
    r.study = parse_study_kind(doc.at("study").get<std::string>());
    r.schema_fingerprint = doc.at("schema_fingerprint").get<std::string>();
    r.config = study_config_from_json(doc.at("config"));
    for (const auto& s : doc.at("scenarios")) r.scenarios.push_back(scenario_from_json(s));
    if (doc.contains("best_k") && !doc["best_k"].is_null()) r.best_k = doc["best_k"].get<std::size_t>();
    if (doc.contains("importance")) {
      for (const auto& [name, entry] : doc["importance"].items()) {
        r.importance.push_back({parse_algorithm(name), entry.at("accuracy").get<double>(), aggregate_from_json(entry)});
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("report: ") + e.what());
  }
}

void emit_report(const StudyReport& report, const std::filesystem::path& path, ReportFormat format) {
  if (format == ReportFormat::Json) {
    write_text(path, report_to_json(report).dump(2) + "\n");
    return;
  }
  std::string csv = "study,id,family,k,algorithm,accuracy,columns,seed,duration_ms\n";
  for (const auto& s : report.scenarios) {
    csv += std::string(to_string(report.study)) + ',' + std::string(to_string(s.kind)) + ',' +
           (s.family ? std::string(short_label(*s.family)) : "") + ',' + (s.k ? std::to_string(*s.k) : "") + ',' +
           std::string(to_string(s.algorithm)) + ',' + csv_number(s.accuracy) + ',' + std::to_string(s.columns) + ',' +
           std::to_string(s.seed) + ',' + csv_number(s.duration_ms) + '\n';
  }
  write_text(path, csv);
  if (report.importance.empty()) return;
  std::string imp = "algorithm,section,key,top_count,importance,top_importance\n";
  for (const auto& e : report.importance) {
    const std::string alg(to_string(e.algorithm));
    for (std::size_t i = 0; i < e.aggregate.top.size(); ++i) {
      const auto& f = e.aggregate.top[i];
      imp += alg + ",top," + f.name + ',' + std::to_string(i + 1) + ',' + csv_number(f.importance) + ",\n";
    }
    for (std::size_t i = 0; i < kImportanceFamilies.size(); ++i) {
      imp += alg + ",family," + std::string(short_label(kImportanceFamilies[i])) + ',' +
             std::to_string(e.aggregate.family_counts[i]) + ',' + csv_number(e.aggregate.family_importance[i]) + ',' +
             csv_number(e.aggregate.top_family_importance[i]) + '\n';
    }
    for (std::size_t i = 0; i < kAxes.size(); ++i) {
      imp += alg + ",axis," + std::string(to_string(kAxes[i])) + ',' + std::to_string(e.aggregate.axis_counts[i]) + ',' +
             csv_number(e.aggregate.axis_importance[i]) + ',' + csv_number(e.aggregate.top_axis_importance[i]) + '\n';
    }
  }
  write_text(path.parent_path() / (path.stem().string() + "_importance.csv"), imp);
}

StudyReport load_report(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  return report_from_json(doc);
}

// ---------------------------------------------------------------------------

Dataset select_families(const Dataset& dataset, std::span<const FeatureFamily> families) {
  if (families.empty()) return dataset;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < dataset.schema.size(); ++c) {
    if (std::find(families.begin(), families.end(), dataset.schema[c].family) != families.end()) cols.push_back(c);
  }
  if (cols.empty()) throw Error(ErrorCode::UnknownFamily, "family filter selects no columns");
  Dataset out;
  out.schema = dataset.schema.select(cols);
  out.labels = dataset.labels;
  out.experiment_ids = dataset.experiment_ids;
  out.features = gather_columns(dataset.features, cols);
  return out;
}

json train_options_to_json(const TrainOptions& o) {
  return {{"algorithm", to_string(o.algorithm)},
          {"hyperparameters", model_config_to_json(o.models)},
          {"train_fraction", o.train_fraction},
          {"seed", o.seed},
          {"split_mode", to_string(o.split_mode)},
          {"pca", {{"target", to_string(o.pca)}, {"k", o.pca_k}}},
          {"families", family_names(o.families)}};
}

TrainOptions train_options_from_json(const json& doc) {
  TrainOptions o;
  try {
    reject_unknown(doc, {"algorithm", "hyperparameters", "train_fraction", "seed", "split_mode", "pca", "families"},
                   "train options");
    if (doc.contains("algorithm")) o.algorithm = parse_algorithm(doc["algorithm"].get<std::string>());
    if (doc.contains("hyperparameters")) o.models = model_config_from_json(doc["hyperparameters"]);
    o.train_fraction = doc.value("train_fraction", o.train_fraction);
    o.seed = doc.value("seed", o.seed);
    if (doc.contains("split_mode")) o.split_mode = parse_split_mode(doc["split_mode"].get<std::string>());
    if (doc.contains("pca")) {
      reject_unknown(doc["pca"], {"target", "k"}, "pca");
      if (doc["pca"].contains("target")) o.pca = parse_pca_target(doc["pca"]["target"].get<std::string>());
      o.pca_k = doc["pca"].value("k", o.pca_k);
    }
    if (doc.contains("families")) o.families = parse_families(doc["families"]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("train options: ") + e.what());
  }
  return o;
}

ModelBundle train_bundle(const Dataset& dataset, const TrainOptions& options) {
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "train fraction must lie in (0, 1)");
  }
  const Dataset ds = select_families(dataset, options.families);
  const SplitIndices split = stratified_split(ds, options.train_fraction, options.seed, options.split_mode);
  ModelBundle b;
  b.schema = dataset.schema;
  b.options = options;
  const TrainingRows raw(ds, split);
  b.scaler = fit_scaler(raw);
  TrainingRows train = b.scaler.apply(raw);
  if (options.pca != PcaTarget::None) {
    b.pca = fit_pca(train, options.pca_k, pca_mask(ds.schema, options.pca));
    train = b.pca->transform(train);
  }
  b.model = train_model(options.algorithm, train.matrix(), train.labels(), options.models);
  b.train_accuracy = accuracy(predict(b.model, train.matrix()), train.labels());
  b.test_accuracy = evaluate_bundle(b, dataset, EvalRows::Test).accuracy;
  return b;
}

EvalResult evaluate_bundle(const ModelBundle& bundle, const Dataset& dataset, EvalRows rows) {
  if (dataset.schema.fingerprint() != bundle.schema.fingerprint()) {
    throw Error(ErrorCode::SchemaMismatch, "feature schema " + dataset.schema.fingerprint() +
                                               " does not match the model's " + bundle.schema.fingerprint());
  }
  const Dataset ds = select_families(dataset, bundle.options.families);
  std::vector<std::size_t> idx;
  if (rows == EvalRows::All) {
    idx.resize(ds.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  } else {
    auto split = stratified_split(ds, bundle.options.train_fraction, bundle.options.seed, bundle.options.split_mode);
    idx = rows == EvalRows::Test ? std::move(split.test) : std::move(split.train);
  }
  const Dataset part = ds.select_rows(idx);
  Eigen::MatrixXd x = bundle.scaler.apply(part.features);
  if (bundle.pca) x = bundle.pca->transform(x);
  const auto pred = predict(bundle.model, x);
  EvalResult r;
  r.accuracy = accuracy(pred, part.labels);
  r.rows = pred.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++r.confusion[static_cast<std::size_t>(part.labels[i])][static_cast<std::size_t>(pred[i])];
    r.correct += pred[i] == part.labels[i];
  }
  return r;
}

json bundle_to_json(const ModelBundle& b) {
  const FeatureSchema used = select_families(Dataset{Eigen::MatrixXd(0, static_cast<Eigen::Index>(b.schema.size())), {},
                                                     {}, b.schema},
                                             b.options.families)
                                 .schema;
  return {{"format", "rotorvib-model"},
          {"version", 1},
          {"schema_fingerprint", b.schema.fingerprint()},
          {"schema", json::parse(schema_to_json(b.schema))},
          {"options", train_options_to_json(b.options)},
          {"scaler", b.scaler.to_json()},
          {"pca", b.pca ? b.pca->to_json(used) : json(nullptr)},
          {"model", model_to_json(b.model)},
          {"train_accuracy", b.train_accuracy},
          {"test_accuracy", b.test_accuracy}};
}

ModelBundle bundle_from_json(const json& doc) {
  try {
    if (doc.value("format", std::string()) != "rotorvib-model") {
      throw Error(ErrorCode::ConfigInvalid, "not a rotorvib model file");
    }
    ModelBundle b;
    b.schema = schema_from_json(doc.at("schema").dump());
    if (b.schema.fingerprint() != doc.at("schema_fingerprint").get<std::string>()) {
      throw Error(ErrorCode::SchemaMismatch, "model file schema does not match its fingerprint");
    }
    b.options = train_options_from_json(doc.at("options"));
    b.scaler = ScalerParams::from_json(doc.at("scaler"));
    if (!doc.at("pca").is_null()) {
      const Dataset empty{Eigen::MatrixXd(0, static_cast<Eigen::Index>(b.schema.size())), {}, {}, b.schema};
      b.pca = PcaModel::from_json(doc["pca"], select_families(empty, b.options.families).schema);
    }
    b.model = model_from_json(doc.at("model"));
    b.train_accuracy = doc.value("train_accuracy", 0.0);
    b.test_accuracy = doc.value("test_accuracy", 0.0);
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("model file: ") + e.what());
  }
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  write_text(path, bundle_to_json(bundle).dump() + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  return bundle_from_json(doc);
}

}  // namespace rotorvib
