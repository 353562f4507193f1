#include <benchmark/benchmark.h>

#include <random>

#include "rotorvib/models.hpp"
#include "rotorvib/pipeline.hpp"

using namespace rotorvib;

namespace {

struct Data {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Data blobs(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 1.0);
  Data out{Eigen::MatrixXd(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)), {}};
  for (Eigen::Index r = 0; r < out.x.rows(); ++r) {
    const int label = r % 3 == 0 ? 0 : 1;
    for (Eigen::Index c = 0; c < out.x.cols(); ++c) out.x(r, c) = d(rng) + 0.6 * label;
    out.y.push_back(label);
  }
  return out;
}

}  // namespace

static void BM_TrainModel(benchmark::State& state) {
  const auto data = blobs(1092, static_cast<std::size_t>(state.range(1)));
  const auto algorithm = static_cast<Algorithm>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_model(algorithm, data.x, data.y));
  state.SetLabel(std::string(to_string(algorithm)));
}
BENCHMARK(BM_TrainModel)
    ->ArgsProduct({{static_cast<int>(Algorithm::Svm), static_cast<int>(Algorithm::DecisionTree),
                    static_cast<int>(Algorithm::RandomForest), static_cast<int>(Algorithm::Knn)},
                   {15, 200}})
    ->Unit(benchmark::kMillisecond);

static void BM_Predict(benchmark::State& state) {
  const auto train = blobs(1092, 50);
  const auto test = blobs(468, 50);
  const auto algorithm = static_cast<Algorithm>(state.range(0));
  const auto model = train_model(algorithm, train.x, train.y);
  for (auto _ : state) benchmark::DoNotOptimize(predict(model, test.x));
  state.SetLabel(std::string(to_string(algorithm)));
}
BENCHMARK(BM_Predict)
    ->DenseRange(static_cast<int>(Algorithm::Svm), static_cast<int>(Algorithm::Knn))
    ->Unit(benchmark::kMicrosecond);

static void BM_FitPca(benchmark::State& state) {
  const auto data = blobs(1092, static_cast<std::size_t>(state.range(0)));
  Dataset ds;
  ds.features = data.x;
  ds.labels = data.y;
  ds.experiment_ids.assign(data.y.size(), "bench");
  std::vector<FeatureDescriptor> d;
  for (Eigen::Index c = 0; c < data.x.cols(); ++c)
    d.push_back({Sensor::Central, Axis::X, FeatureFamily::Stft, static_cast<std::size_t>(c), "c" + std::to_string(c)});
  ds.schema = FeatureSchema(d);
  const auto split = stratified_split(ds);
  const TrainingRows rows(ds, split);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pca(rows, 20, all_columns(ds.cols())));
}
BENCHMARK(BM_FitPca)->Arg(100)->Arg(1000)->Arg(4374)->Unit(benchmark::kMillisecond);
