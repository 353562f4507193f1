#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rotorvib/models.hpp"
#include "rotorvib/pipeline.hpp"

namespace rotorvib {

enum class ScenarioKind { NoPca, StftPca, AllPca, Isolation };

std::string_view to_string(ScenarioKind kind) noexcept;  // no_pca, stft_pca, all_pca, isolation

struct ScenarioResult {
  ScenarioKind kind = ScenarioKind::NoPca;
  std::optional<FeatureFamily> family;  // isolation only
  std::optional<std::size_t> k;         // number of principal components, if any
  Algorithm algorithm = Algorithm::Svm;
  double accuracy = 0.0;
  std::size_t columns = 0;  // model input width
  std::uint64_t seed = 0;
  double duration_ms = 0.0;
};

enum class PcaTarget { None, Stft, All };

std::string_view to_string(PcaTarget target) noexcept;  // none, stft, all
PcaTarget parse_pca_target(std::string_view text);

struct StudyConfig {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  SplitMode split_mode = SplitMode::Row;
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<std::size_t> pca_ks{10, 15, 20};
  Algorithm sweep_algorithm = Algorithm::DecisionTree;
  std::size_t sweep_k_min = 2;
  std::size_t sweep_k_max = 30;
  PcaTarget sweep_target = PcaTarget::Stft;
  std::vector<FeatureFamily> isolation_families{FeatureFamily::Stft, FeatureFamily::Wavelet,
                                                FeatureFamily::TimeDomain};
  std::size_t top_k = 10;
  ModelConfig models;

  void validate() const;
};

nlohmann::json study_config_to_json(const StudyConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected with ConfigInvalid.
StudyConfig study_config_from_json(const nlohmann::json& doc);

/// No PCA, PCA over the STFT columns and PCA over every column, each with
/// every configured k. All scenarios share one split and one scaler.
std::vector<ScenarioResult> run_pca_scenarios(const Dataset& dataset, const StudyConfig& config);

struct SweepResult {
  std::vector<ScenarioResult> results;  // one per k, ascending
  std::size_t best_k = 0;               // highest accuracy; ties go to the smallest k
};

SweepResult pca_component_sweep(const Dataset& dataset, const StudyConfig& config);

/// Every configured algorithm on each family's columns alone, without PCA and
/// with each k (capped at the family's column count, duplicates dropped).
std::vector<ScenarioResult> run_feature_isolation(const Dataset& dataset, const StudyConfig& config);

/// Highest isolation accuracy per family, across algorithms and k.
double best_accuracy(std::span<const ScenarioResult> results, FeatureFamily family);

struct RankedFeature {
  std::string name;
  FeatureFamily family = FeatureFamily::TimeDomain;
  Axis axis = Axis::X;
  double importance = 0.0;
};

inline constexpr std::array<FeatureFamily, 5> kImportanceFamilies{
    FeatureFamily::Stft, FeatureFamily::FrequencySkewness, FeatureFamily::SpectralCentroid, FeatureFamily::Wavelet,
    FeatureFamily::TimeDomain};
inline constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

struct ImportanceAggregate {
  std::vector<RankedFeature> top;  // descending importance; ties keep schema order
  /// Indexed like kImportanceFamilies / kAxes.
  std::array<std::size_t, 5> family_counts{};
  std::array<double, 5> family_importance{};  // over all features
  std::array<double, 5> top_family_importance{};
  std::array<std::size_t, 3> axis_counts{};
  std::array<double, 3> axis_importance{};
  std::array<double, 3> top_axis_importance{};
};

/// Gini importance of a tree-based model trained without PCA, ranked and
/// broken down by family and axis. Throws NotTreeBased for kNN and SVM and
/// PcaModelRejected when `pca` is given or the schema carries projected columns.
ImportanceAggregate aggregate_importance(const TrainedModel& model, const FeatureSchema& schema,
                                         std::size_t top_k = 10, const PcaModel* pca = nullptr);

struct ImportanceEntry {
  Algorithm algorithm = Algorithm::DecisionTree;
  double accuracy = 0.0;
  ImportanceAggregate aggregate;
};

/// Trains the tree-based algorithms among the configured ones on the shared
/// split (no PCA) and aggregates their importances.
std::vector<ImportanceEntry> run_importance_study(const Dataset& dataset, const StudyConfig& config);

// ---------------------------------------------------------------------------
// Reports

enum class StudyKind { PcaScenarios, PcaSweep, Isolation, Importance };

std::string_view to_string(StudyKind kind) noexcept;  // pca-scenarios, pca-sweep, isolation, importance
StudyKind parse_study_kind(std::string_view text);

struct StudyReport {
  StudyKind study = StudyKind::PcaScenarios;
  StudyConfig config;
  std::string schema_fingerprint;
  std::vector<ScenarioResult> scenarios;
  std::optional<std::size_t> best_k;
  std::vector<ImportanceEntry> importance;
};

StudyReport run_study(StudyKind kind, const Dataset& dataset, const StudyConfig& config);

enum class ReportFormat { Json, Csv };

ReportFormat parse_report_format(std::string_view text);

nlohmann::json report_to_json(const StudyReport& report);
StudyReport report_from_json(const nlohmann::json& doc);
/// JSON writes one document. CSV writes the scenario table to `path` and, for
/// importance studies, the breakdown to `<stem>_importance.csv` next to it.
void emit_report(const StudyReport& report, const std::filesystem::path& path, ReportFormat format);
StudyReport load_report(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Trained pipeline bundle

struct TrainOptions {
  Algorithm algorithm = Algorithm::RandomForest;
  ModelConfig models;
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  SplitMode split_mode = SplitMode::Row;
  PcaTarget pca = PcaTarget::None;
  std::size_t pca_k = 15;
  std::vector<FeatureFamily> families;  // empty = all columns
};

/// Everything needed to score a feature matrix: column filter, scaler,
/// optional PCA and the classifier, tied to the schema it was trained on.
struct ModelBundle {
  FeatureSchema schema;  // full input schema
  TrainOptions options;
  ScalerParams scaler;
  std::optional<PcaModel> pca;
  TrainedModel model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

ModelBundle train_bundle(const Dataset& dataset, const TrainOptions& options);

enum class EvalRows { Test, Train, All };

struct EvalResult {
  double accuracy = 0.0;
  std::size_t rows = 0;
  std::size_t correct = 0;
  std::array<std::array<std::size_t, 2>, 2> confusion{};  // [true][predicted]
};

/// Throws SchemaMismatch unless the dataset schema fingerprint equals the
/// bundle's. Test/Train rows are recreated from the bundle's split settings.
EvalResult evaluate_bundle(const ModelBundle& bundle, const Dataset& dataset, EvalRows rows = EvalRows::Test);

nlohmann::json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const nlohmann::json& doc);
void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

nlohmann::json train_options_to_json(const TrainOptions& options);
TrainOptions train_options_from_json(const nlohmann::json& doc);

std::string_view to_string(SplitMode mode) noexcept;  // row, experiment
SplitMode parse_split_mode(std::string_view text);

/// Columns of the given families in schema order (all columns when empty).
Dataset select_families(const Dataset& dataset, std::span<const FeatureFamily> families);

}  // namespace rotorvib
