#include <cmath>
#include <fstream>

#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/features.hpp"

namespace postcheck::features {

PreparedRecord prepare_record(dataset::CleanRecord record, const ImageResolver& resolver) {
  PreparedRecord p;
  p.text = normalize_text(record.text);
  p.images = compute_image_features(record.image_refs, resolver);
  p.record = std::move(record);
  return p;
}

std::vector<PreparedRecord> prepare_records(std::vector<dataset::CleanRecord> records,
                                            const ImageResolver& resolver) {
  std::vector<PreparedRecord> out;
  out.reserve(records.size());
  for (auto& r : records) out.push_back(prepare_record(std::move(r), resolver));
  return out;
}

MetaFeatureVector meta_features(const PreparedRecord& p, double user_score) {
  const auto& r = p.record;
  const TimeFeatures t = decode_timestamp(r.timestamp);
  return {static_cast<double>(r.likes),
          static_cast<double>(r.comments),
          static_cast<double>(r.shares),
          static_cast<double>(utf8_length(p.text.text)),
          static_cast<double>(t.minute),
          static_cast<double>(t.hour),
          static_cast<double>(t.day),
          static_cast<double>(t.month),
          static_cast<double>(t.year),
          static_cast<double>(t.weekday),
          static_cast<double>(t.is_weekend),
          user_score,
          static_cast<double>(p.images.image_count),
          p.images.image_aspect_mean};
}

Eigen::MatrixXd raw_meta_matrix(std::span<const PreparedRecord> records, const UserScoreTable& scores) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), kMetaDim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto v = meta_features(records[i], scores.score(records[i].record));
    for (int c = 0; c < kMetaDim; ++c) m(static_cast<Eigen::Index>(i), c) = v[static_cast<std::size_t>(c)];
  }
  return m;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& raw, std::span<const std::string> ids) {
  if (raw.rows() == 0) throw ShapeError("cannot fit a standardizer on zero rows");
  Standardizer s;
  s.mean = raw.colwise().mean();
  s.stddev = ((raw.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(raw.rows()))
                 .sqrt()
                 .matrix();
  s.source_ids.insert(ids.begin(), ids.end());
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != mean.size()) {
    throw ShapeError("standardizer expects " + std::to_string(mean.size()) + " columns, got " +
                     std::to_string(raw.cols()));
  }
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    // Zero-variance columns carry no information; map them to 0.
    if (!(stddev(c) > 1e-12)) {
      out.col(c).setZero();
    } else {
      out.col(c) = (raw.col(c).array() - mean(c)) / stddev(c);
    }
  }
  return out;
}

nlohmann::json Standardizer::to_json() const {
  std::vector<double> m(mean.data(), mean.data() + mean.size());
  std::vector<double> s(stddev.data(), stddev.data() + stddev.size());
  return {{"mean", m}, {"stddev", s}, {"source_count", source_ids.size()}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto d = j.at("stddev").get<std::vector<double>>();
  if (m.size() != d.size()) throw ConfigError("standardizer: mean/stddev length mismatch");
  s.mean = Eigen::Map<const Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  s.stddev = Eigen::Map<const Eigen::RowVectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
  return s;
}

MetaMatrix build_meta_matrix(std::span<const PreparedRecord> train_records, const UserScoreTable& scores) {
  MetaMatrix out;
  for (const auto& r : train_records) out.ids.push_back(r.record.id);
  const Eigen::MatrixXd raw = raw_meta_matrix(train_records, scores);
  out.standardizer = Standardizer::fit(raw, out.ids);
  out.values = out.standardizer.apply(raw);
  return out;
}

MetaMatrix transform_meta_matrix(std::span<const PreparedRecord> records, const UserScoreTable& scores,
                                 const Standardizer& standardizer) {
  MetaMatrix out;
  for (const auto& r : records) out.ids.push_back(r.record.id);
  out.standardizer = standardizer;
  out.values = standardizer.apply(raw_meta_matrix(records, scores));
  return out;
}

void write_feature_matrix(const std::filesystem::path& prefix, const MetaMatrix& m) {
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  const auto payload = std::filesystem::path(prefix.string() + ".f64");
  std::ofstream out(payload, std::ios::binary);
  if (!out) throw IoError("cannot write " + payload.string());
  // Eigen's default storage is column-major already.
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.values.size())));

  std::vector<std::string> columns(kMetaColumns.begin(), kMetaColumns.end());
  write_json_file(prefix.string() + ".json",
                  {{"layout", "column-major float64 little-endian"},
                   {"payload", payload.filename().string()},
                   {"rows", m.values.rows()},
                   {"columns", columns},
                   {"ids", m.ids},
                   {"standardization", m.standardizer.to_json()}});
}

MetaMatrix read_feature_matrix(const std::filesystem::path& prefix) {
  const json side = read_json_file(prefix.string() + ".json");
  MetaMatrix m;
  const auto rows = side.at("rows").get<Eigen::Index>();
  const auto cols = static_cast<Eigen::Index>(side.at("columns").size());
  m.ids = side.at("ids").get<std::vector<std::string>>();
  m.standardizer = Standardizer::from_json(side.at("standardization"));
  m.values.resize(rows, cols);
  std::ifstream in(prefix.string() + ".f64", std::ios::binary);
  if (!in) throw IoError("cannot open " + prefix.string() + ".f64");
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.values.size())));
  if (!in) throw IoError("truncated feature payload " + prefix.string() + ".f64");
  return m;
}

}  // namespace postcheck::features
