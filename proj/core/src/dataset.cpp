#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "rotorvib/error.hpp"
#include "rotorvib/pipeline.hpp"

namespace rotorvib {
namespace {

std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (labels.size() != rows() || experiment_ids.size() != rows()) {
    throw Error(ErrorCode::LengthMismatch, "dataset row, label and id counts disagree");
  }
  if (schema.size() != cols()) throw Error(ErrorCode::SchemaMismatch, "dataset columns do not match schema");
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
  }
  if (!features.allFinite()) throw Error(ErrorCode::NonFinite, "dataset contains NaN or Inf");
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows_to_keep) const {
  Dataset out;
  out.schema = schema;
  out.features.resize(static_cast<Eigen::Index>(rows_to_keep.size()), features.cols());
  for (std::size_t i = 0; i < rows_to_keep.size(); ++i) {
    const auto r = rows_to_keep[i];
    if (r >= rows()) throw Error(ErrorCode::InvalidArgument, "row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(r));
    out.labels.push_back(labels[r]);
    out.experiment_ids.push_back(experiment_ids[r]);
  }
  return out;
}

Dataset make_dataset(std::span<const FeatureVector> vectors, FeatureSchema schema) {
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(schema.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (v.values.size() != schema.size()) throw Error(ErrorCode::SchemaMismatch, "feature vector length mismatch");
    ds.features.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(v.values.data(), static_cast<Eigen::Index>(v.values.size()));
    ds.labels.push_back(v.label);
    ds.experiment_ids.push_back(v.experiment_id);
  }
  ds.schema = std::move(schema);
  ds.validate();
  return ds;
}

void write_feature_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  std::string line;
  for (const auto& d : dataset.schema.descriptors()) {
    line += d.name;
    line += ',';
  }
  line += "experiment_id,label\n";
  out << line;
  std::array<char, 32> buf{};
  for (Eigen::Index r = 0; r < dataset.features.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < dataset.features.cols(); ++c) {
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), dataset.features(r, c));
      line.append(buf.data(), res.ptr);
      line += ',';
    }
    line += dataset.experiment_ids[static_cast<std::size_t>(r)];
    line += ',';
    line += std::to_string(dataset.labels[static_cast<std::size_t>(r)]);
    line += '\n';
    out << line;
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

Dataset read_feature_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::string_view rest = text;

  auto next_line = [&rest]() -> std::string_view {
    const auto pos = rest.find('\n');
    std::string_view line = rest.substr(0, pos);
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  const auto header = split_csv(next_line());
  const std::size_t cols = schema.size();
  if (header.size() != cols + 2 || header[cols] != "experiment_id" || header[cols + 1] != "label") {
    throw Error(ErrorCode::SchemaMismatch, "feature csv header does not match the schema");
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (header[c] != schema[c].name) {
      throw Error(ErrorCode::SchemaMismatch, "column " + std::to_string(c) + " is '" + std::string(header[c]) +
                                                 "', schema expects '" + schema[c].name + "'");
    }
  }

  std::vector<double> values;
  Dataset ds;
  ds.schema = schema;
  std::size_t line_no = 1;
  while (!rest.empty()) {
    const std::string_view line = next_line();
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != cols + 2) {
      throw Error(ErrorCode::MalformedLine, path.string() + ": line " + std::to_string(line_no) + ": wrong arity");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      const auto f = fields[c];
      const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || end != f.data() + f.size()) {
        throw Error(ErrorCode::MalformedLine,
                    path.string() + ": line " + std::to_string(line_no) + ": bad number '" + std::string(f) + "'");
      }
      values.push_back(v);
    }
    ds.experiment_ids.emplace_back(fields[cols]);
    if (fields[cols + 1] != "0" && fields[cols + 1] != "1") {
      throw Error(ErrorCode::MalformedLine, path.string() + ": line " + std::to_string(line_no) + ": bad label");
    }
    ds.labels.push_back(fields[cols + 1] == "1" ? 1 : 0);
  }
  const auto rows = static_cast<Eigen::Index>(ds.labels.size());
  ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, static_cast<Eigen::Index>(cols));
  ds.validate();
  return ds;
}

Dataset select_family(const Dataset& dataset, FeatureFamily family) {
  const auto cols = dataset.schema.columns_of(family);
  if (cols.empty()) {
    throw Error(ErrorCode::UnknownFamily,
                "family " + std::string(to_string(family)) + " is not present in the dataset schema");
  }
  Dataset out;
  out.schema = dataset.schema.select(cols);
  out.labels = dataset.labels;
  out.experiment_ids = dataset.experiment_ids;
  out.features.resize(dataset.features.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.features.col(static_cast<Eigen::Index>(i)) = dataset.features.col(static_cast<Eigen::Index>(cols[i]));
  }
  return out;
}

SplitIndices stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed, SplitMode mode) {
  if (dataset.rows() == 0) throw Error(ErrorCode::EmptyDataset, "cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  if (dataset.labels.size() != dataset.rows() || dataset.experiment_ids.size() != dataset.rows()) {
    throw Error(ErrorCode::LengthMismatch, "dataset row, label and id counts disagree");
  }

  std::mt19937_64 rng(seed);
  SplitIndices split;
  bool present[2] = {false, false};
  for (int l : dataset.labels) present[l == 1] = true;
  if (!present[0] || !present[1]) throw Error(ErrorCode::SingleClass, "stratified split needs both classes");

  for (int cls : {0, 1}) {
    if (mode == SplitMode::Row) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < dataset.rows(); ++i) {
        if (dataset.labels[i] == cls) members.push_back(i);
      }
      std::shuffle(members.begin(), members.end(), rng);
      const std::size_t n_train = std::min(members.size(), round_half_up(train_fraction * members.size()));
      split.train.insert(split.train.end(), members.begin(), members.begin() + n_train);
      split.test.insert(split.test.end(), members.begin() + n_train, members.end());
    } else {
      // Experiments in first-appearance order, then shuffled as units.
      std::vector<std::string> groups;
      std::map<std::string, std::vector<std::size_t>> rows_of;
      for (std::size_t i = 0; i < dataset.rows(); ++i) {
        if (dataset.labels[i] != cls) continue;
        auto [it, inserted] = rows_of.try_emplace(dataset.experiment_ids[i]);
        if (inserted) groups.push_back(dataset.experiment_ids[i]);
        it->second.push_back(i);
      }
      std::shuffle(groups.begin(), groups.end(), rng);
      const std::size_t n_train = std::min(groups.size(), round_half_up(train_fraction * groups.size()));
      for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& target = g < n_train ? split.train : split.test;
        const auto& rows = rows_of[groups[g]];
        target.insert(target.end(), rows.begin(), rows.end());
      }
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<std::size_t> all_columns(std::size_t count) {
  std::vector<std::size_t> cols(count);
  for (std::size_t i = 0; i < count; ++i) cols[i] = i;
  return cols;
}

}  // namespace rotorvib
