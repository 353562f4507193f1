#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "rotorvib/analysis.hpp"
#include "rotorvib/error.hpp"
#include "rotorvib/features.hpp"
#include "rotorvib/ingest.hpp"
#include "rotorvib/synth.hpp"

namespace rotorvib::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Paths {
  fs::path out_dir = ".";
  std::optional<fs::path> corpus;
  std::optional<fs::path> manifest;
  std::optional<fs::path> features;
  std::optional<fs::path> schema;
  std::optional<fs::path> model;
  std::optional<fs::path> report;
};

struct RunConfig {
  std::uint64_t seed = 42;
  bool forest_seed_explicit = false;
  Paths paths;
  SnrConfig synth;
  FeatureParams features;
  TrainOptions train;
  json study = json::object();
  ReportFormat format = ReportFormat::Json;
};

void reject_unknown(const json& doc, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigInvalid, std::string(where) + " must be a JSON object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, value] : doc.items()) {
    if (!keys.contains(key)) throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "' in " + std::string(where));
  }
}

std::optional<fs::path> path_field(const json& doc, const char* key, const fs::path& base) {
  if (!doc.contains(key)) return std::nullopt;
  fs::path p = doc[key].get<std::string>();
  return p.is_absolute() ? p : base / p;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config " + path.string());
  RunConfig c;
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  try {
    const json doc = json::parse(in);
    reject_unknown(doc, {"seed", "paths", "synth", "features", "split", "pca", "algorithm", "hyperparameters",
                         "families", "study", "format"},
                   "config");
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("paths")) {
      const auto& p = doc["paths"];
      reject_unknown(p, {"out_dir", "corpus", "manifest", "features", "schema", "model", "report"}, "paths");
      if (auto v = path_field(p, "out_dir", base)) c.paths.out_dir = *v;
      c.paths.corpus = path_field(p, "corpus", base);
      c.paths.manifest = path_field(p, "manifest", base);
      c.paths.features = path_field(p, "features", base);
      c.paths.schema = path_field(p, "schema", base);
      c.paths.model = path_field(p, "model", base);
      c.paths.report = path_field(p, "report", base);
    }
    if (doc.contains("synth")) {
      const auto& s = doc["synth"];
      reject_unknown(s, {"noise_sigma_g", "crack_depth", "trim_factor", "scratch_factor", "window_gain_jitter",
                         "harmonic_jitter", "instance_jitter", "duration_s", "noise_only"},
                     "synth");
      auto& t = c.synth;
      t.noise_sigma_g = s.value("noise_sigma_g", t.noise_sigma_g);
      t.crack_depth = s.value("crack_depth", t.crack_depth);
      t.trim_factor = s.value("trim_factor", t.trim_factor);
      t.scratch_factor = s.value("scratch_factor", t.scratch_factor);
      t.window_gain_jitter = s.value("window_gain_jitter", t.window_gain_jitter);
      t.harmonic_jitter = s.value("harmonic_jitter", t.harmonic_jitter);
      t.instance_jitter = s.value("instance_jitter", t.instance_jitter);
      t.duration_s = s.value("duration_s", t.duration_s);
      t.noise_only = s.value("noise_only", t.noise_only);
    }
    if (doc.contains("features")) {
      const auto& f = doc["features"];
      reject_unknown(f, {"segment_length", "hop", "entropy_bins", "wavelet_levels", "wavelet", "window_size"},
                     "features");
      auto& p = c.features;
      p.stft.segment_length = f.value("segment_length", p.stft.segment_length);
      p.stft.hop = f.value("hop", p.stft.hop);
      p.entropy_bins = f.value("entropy_bins", p.entropy_bins);
      p.wavelet_levels = f.value("wavelet_levels", p.wavelet_levels);
      if (f.contains("wavelet")) p.wavelet = parse_wavelet_family(f["wavelet"].get<std::string>());
      p.window_size = f.value("window_size", p.window_size);
    }
    if (doc.contains("split")) {
      const auto& s = doc["split"];
      reject_unknown(s, {"train_fraction", "mode"}, "split");
      c.train.train_fraction = s.value("train_fraction", c.train.train_fraction);
      if (s.contains("mode")) c.train.split_mode = parse_split_mode(s["mode"].get<std::string>());
    }
    if (doc.contains("pca")) {
      const auto& p = doc["pca"];
      reject_unknown(p, {"target", "k"}, "pca");
      if (p.contains("target")) c.train.pca = parse_pca_target(p["target"].get<std::string>());
      c.train.pca_k = p.value("k", c.train.pca_k);
    }
    if (doc.contains("algorithm")) c.train.algorithm = parse_algorithm(doc["algorithm"].get<std::string>());
    if (doc.contains("hyperparameters")) {
      c.train.models = model_config_from_json(doc["hyperparameters"]);
      const auto& h = doc["hyperparameters"];
      c.forest_seed_explicit = h.contains("rf") && h["rf"].contains("seed");
    }
    if (doc.contains("families")) {
      c.train.families.clear();
      for (const auto& f : doc["families"]) c.train.families.push_back(parse_feature_family(f.get<std::string>()));
    }
    if (doc.contains("study")) {
      c.study = doc["study"];
      reject_unknown(c.study, {"algorithms", "pca_ks", "sweep", "isolation_families", "top_k"}, "study");
    }
    if (doc.contains("format")) c.format = parse_report_format(doc["format"].get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, "config " + path.string() + ": " + e.what());
  }
  return c;
}

void finalize(RunConfig& c) {
  c.train.seed = c.seed;
  if (!c.forest_seed_explicit) c.train.models.rf.seed = c.seed;
  c.features.validate();
  if (!(c.train.train_fraction > 0.0 && c.train.train_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "train fraction must lie in (0, 1)");
  }
  if (c.train.pca != PcaTarget::None && c.train.pca_k < 1) throw Error(ErrorCode::ConfigInvalid, "pca k must be >= 1");
}

StudyConfig study_config(const RunConfig& c) {
  json doc = c.study;
  doc["train_fraction"] = c.train.train_fraction;
  doc["seed"] = c.seed;
  doc["split_mode"] = to_string(c.train.split_mode);
  doc["hyperparameters"] = model_config_to_json(c.train.models);
  return study_config_from_json(doc);
}

// Refuses to overwrite any input of the same command.
void check_distinct(std::initializer_list<fs::path> inputs, std::initializer_list<fs::path> outputs) {
  for (const auto& o : outputs) {
    const auto co = fs::weakly_canonical(o);
    for (const auto& i : inputs) {
      if (fs::weakly_canonical(i) == co) {
        throw Error(ErrorCode::ConfigInvalid, "output " + o.string() + " would overwrite an input");
      }
    }
  }
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void print_result(std::ostream& out, const json& result, ReportFormat format) {
  if (format == ReportFormat::Json) {
    out << result.dump() << '\n';
    return;
  }
  std::string header;
  std::string row;
  for (const auto& [key, value] : result.items()) {
    if (!header.empty()) {
      header += ',';
      row += ',';
    }
    header += key;
    row += value.is_string() ? value.get<std::string>() : value.dump();
  }
  out << header << '\n' << row << '\n';
}

fs::path schema_beside(const fs::path& features) {
  return features.has_parent_path() ? features.parent_path() / "schema.json" : fs::path("schema.json");
}

Dataset load_features(const fs::path& features, const fs::path& schema) {
  return read_feature_csv(features, read_schema(schema));
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format;
  bool quiet = false;
  std::string manifest;
  std::string features;
  std::string schema;
  std::string model;
  std::string report;
  std::string algorithm;
  std::string pca;
  std::size_t k = 0;
  std::vector<std::string> families;
  std::string rows = "test";
  std::string study;
};

void apply_flags(RunConfig& c, const Options& o, const CLI::App& app) {
  if (o.seed) {
    c.seed = *o.seed;
    c.forest_seed_explicit = false;
  }
  if (!o.out_dir.empty()) c.paths.out_dir = o.out_dir;
  if (!o.format.empty()) c.format = parse_report_format(o.format);
  if (!o.manifest.empty()) c.paths.manifest = o.manifest;
  if (!o.features.empty()) c.paths.features = o.features;
  if (!o.schema.empty()) c.paths.schema = o.schema;
  if (!o.model.empty()) c.paths.model = o.model;
  if (!o.report.empty()) c.paths.report = o.report;
  if (!o.algorithm.empty()) c.train.algorithm = parse_algorithm(o.algorithm);
  if (!o.pca.empty()) c.train.pca = parse_pca_target(o.pca);
  if (app.get_subcommand("train")->count("--k") > 0) c.train.pca_k = o.k;
  if (!o.families.empty()) {
    c.train.families.clear();
    for (const auto& f : o.families) c.train.families.push_back(parse_feature_family(f));
  }
}

int cmd_synth(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const fs::path dir = c.paths.corpus.value_or(c.paths.out_dir / "corpus");
  log << "synth: writing 26 experiments to " << dir.string() << '\n';
  const auto sources = generate_paper_shaped_corpus(dir, c.seed, c.synth);
  print_result(out, {{"manifest", (dir / "manifest.json").string()}, {"experiments", sources.size()}}, c.format);
  return 0;
}

int cmd_extract(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const fs::path manifest = c.paths.manifest.value_or(c.paths.out_dir / "corpus" / "manifest.json");
  const fs::path features = c.paths.features.value_or(c.paths.out_dir / "features.csv");
  const fs::path schema_path = c.paths.schema.value_or(schema_beside(features));
  check_distinct({manifest}, {features, schema_path});
  const auto sources = read_manifest(manifest);
  log << "extract: loading " << sources.size() << " experiments from " << manifest.string() << '\n';
  const auto pairs = assemble_corpus(sources, c.features.window_size);
  log << "extract: computing features for " << pairs.size() << " window pairs\n";
  const FeatureSchema schema = FeatureSchema::build(c.features);
  const Dataset ds = make_dataset(extract_corpus_features(pairs, c.features), schema);
  ensure_parent(features);
  ensure_parent(schema_path);
  write_feature_csv(features, ds);
  write_schema(schema_path, schema, c.features);
  print_result(out,
               {{"features", features.string()},
                {"schema", schema_path.string()},
                {"rows", ds.rows()},
                {"columns", ds.cols()},
                {"fingerprint", schema.fingerprint()}},
               c.format);
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const fs::path features = c.paths.features.value_or(c.paths.out_dir / "features.csv");
  const fs::path schema = c.paths.schema.value_or(schema_beside(features));
  const fs::path model = c.paths.model.value_or(c.paths.out_dir / "model.json");
  check_distinct({features, schema}, {model});
  const Dataset ds = load_features(features, schema);
  log << "train: " << to_string(c.train.algorithm) << " on " << ds.rows() << " x " << ds.cols() << '\n';
  const ModelBundle bundle = train_bundle(ds, c.train);
  ensure_parent(model);
  save_bundle(model, bundle);
  print_result(out,
               {{"model", model.string()},
                {"algorithm", to_string(c.train.algorithm)},
                {"train_accuracy", bundle.train_accuracy},
                {"test_accuracy", bundle.test_accuracy}},
               c.format);
  return 0;
}

int cmd_eval(const RunConfig& c, const std::string& rows_text, std::ostream& out, std::ostream& log) {
  const fs::path features = c.paths.features.value_or(c.paths.out_dir / "features.csv");
  const fs::path schema = c.paths.schema.value_or(schema_beside(features));
  const fs::path model = c.paths.model.value_or(c.paths.out_dir / "model.json");
  EvalRows rows = EvalRows::Test;
  if (rows_text == "train") {
    rows = EvalRows::Train;
  } else if (rows_text == "all") {
    rows = EvalRows::All;
  } else if (rows_text != "test") {
    throw Error(ErrorCode::ConfigInvalid, "--rows must be test, train or all");
  }
  if (c.paths.report) check_distinct({features, schema, model}, {*c.paths.report});
  const ModelBundle bundle = load_bundle(model);
  const Dataset ds = load_features(features, schema);
  log << "eval: " << to_string(algorithm_of(bundle.model)) << " on " << rows_text << " rows\n";
  const EvalResult r = evaluate_bundle(bundle, ds, rows);
  const json result = {{"model", model.string()},
                       {"rows", rows_text},
                       {"count", r.rows},
                       {"correct", r.correct},
                       {"accuracy", r.accuracy},
                       {"tn", r.confusion[0][0]},
                       {"fp", r.confusion[0][1]},
                       {"fn", r.confusion[1][0]},
                       {"tp", r.confusion[1][1]}};
  if (c.paths.report) {
    ensure_parent(*c.paths.report);
    std::ofstream f(*c.paths.report);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + c.paths.report->string());
    print_result(f, result, c.format);
  }
  print_result(out, result, c.format);
  return 0;
}

int cmd_study(const RunConfig& c, const std::string& kind_text, std::ostream& out, std::ostream& log) {
  const StudyKind kind = parse_study_kind(kind_text);
  const StudyConfig config = study_config(c);
  const fs::path features = c.paths.features.value_or(c.paths.out_dir / "features.csv");
  const fs::path schema = c.paths.schema.value_or(schema_beside(features));
  const std::string ext = c.format == ReportFormat::Json ? ".json" : ".csv";
  const fs::path report = c.paths.report.value_or(c.paths.out_dir / (kind_text + ext));
  check_distinct({features, schema}, {report});
  const Dataset ds = load_features(features, schema);
  log << "study: " << kind_text << " on " << ds.rows() << " x " << ds.cols() << '\n';
  const StudyReport r = run_study(kind, ds, config);
  ensure_parent(report);
  emit_report(r, report, c.format);
  json summary = {{"report", report.string()}, {"study", kind_text}, {"scenarios", r.scenarios.size()}};
  if (r.best_k) summary["best_k"] = *r.best_k;
  print_result(out, summary, c.format);
  return 0;
}

int exit_code(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
  }
  return 3;
}

std::string_view category_name(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numeric: return "numeric";
  }
  return "data";
}

int report_error(std::ostream& err, std::string_view code, ErrorCategory cat, const std::string& message) {
  const int rc = exit_code(cat);
  err << json{{"error", code}, {"category", category_name(cat)}, {"exit_code", rc}, {"message", message}}.dump()
      << '\n';
  return rc;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotor blade defect detection from dual-sensor vibration logs", "rotorvib"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Master seed (corpus, split, forest)");
  app.add_option("--out-dir", o.out_dir, "Directory for default outputs");
  app.add_option("--format", o.format, "Result and report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--quiet", o.quiet, "Suppress progress messages");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic 26-experiment corpus");
  auto* extract = app.add_subcommand("extract", "Extract window features from a corpus manifest");
  extract->add_option("--manifest", o.manifest, "Corpus manifest JSON");
  extract->add_option("--features", o.features, "Output feature CSV");
  extract->add_option("--schema", o.schema, "Output schema JSON");
  auto* train = app.add_subcommand("train", "Train a classifier on a feature CSV");
  train->add_option("--features", o.features, "Feature CSV");
  train->add_option("--schema", o.schema, "Schema JSON (default: schema.json next to the features)");
  train->add_option("--model", o.model, "Output model JSON");
  train->add_option("--algorithm", o.algorithm, "svm, dt, rf or knn")->check(CLI::IsMember({"svm", "dt", "rf", "knn"}));
  train->add_option("--pca", o.pca, "none, stft or all")->check(CLI::IsMember({"none", "stft", "all"}));
  train->add_option("--k", o.k, "Number of principal components");
  train->add_option("--families", o.families, "Restrict to these feature families");
  auto* eval = app.add_subcommand("eval", "Score a trained model on a feature CSV");
  eval->add_option("--model", o.model, "Model JSON");
  eval->add_option("--features", o.features, "Feature CSV");
  eval->add_option("--schema", o.schema, "Schema JSON (default: schema.json next to the features)");
  eval->add_option("--rows", o.rows, "test (held-out split), train or all")->check(CLI::IsMember({"test", "train", "all"}));
  eval->add_option("--report", o.report, "Also write the result to this file");
  auto* study = app.add_subcommand("study", "Run one of the analysis studies");
  study->add_option("kind", o.study, "pca-scenarios, pca-sweep, isolation or importance")->required();
  study->add_option("--features", o.features, "Feature CSV");
  study->add_option("--schema", o.schema, "Schema JSON (default: schema.json next to the features)");
  study->add_option("--report", o.report, "Report path");
  for (auto* sub : {synth, extract, train, eval, study}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error(err, "ConfigInvalid", ErrorCategory::Config, e.what());
  }

  std::ostringstream sink;
  std::ostream& log = o.quiet ? static_cast<std::ostream&>(sink) : err;
  try {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    apply_flags(c, o, app);
    finalize(c);
    if (synth->parsed()) return cmd_synth(c, out, log);
    if (extract->parsed()) return cmd_extract(c, out, log);
    if (train->parsed()) return cmd_train(c, out, log);
    if (eval->parsed()) return cmd_eval(c, o.rows, out, log);
    return cmd_study(c, o.study, out, log);
  } catch (const Error& e) {
    return report_error(err, to_string(e.code()), e.category(), e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(err, to_string(ErrorCode::Io), ErrorCategory::Data, e.what());
  } catch (const std::exception& e) {
    return report_error(err, "Internal", ErrorCategory::Numeric, e.what());
  }
}

}  // namespace rotorvib::cli
