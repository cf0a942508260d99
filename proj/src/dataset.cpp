#include "latmod/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace latmod {

using nlohmann::json;

// ---------------------------------------------------------------------------
// DemographicSchema
// ---------------------------------------------------------------------------

void DemographicSchema::validate() const {
  if (axes.empty()) throw ValidationError("schema: at least one axis required");
  std::set<std::string> names;
  for (const auto& axis : axes) {
    if (axis.name.empty()) throw ValidationError("schema: axis name must be non-empty");
    if (!names.insert(axis.name).second) {
      throw ValidationError("schema: duplicate axis name '" + axis.name + "'");
    }
    if (axis.values.size() < 2) {
      throw ValidationError("schema: axis '" + axis.name + "' needs >= 2 values");
    }
    std::set<std::string> values;
    for (const auto& v : axis.values) {
      if (!values.insert(v).second) {
        throw ValidationError("schema: duplicate value '" + v + "' on axis '" + axis.name + "'");
      }
    }
  }
}

int DemographicSchema::axis_index(std::string_view name) const {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int DemographicSchema::value_index(std::size_t axis, std::string_view value) const {
  const auto& values = axes.at(axis).values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == value) return static_cast<int>(i);
  }
  return -1;
}

std::size_t DemographicSchema::group_count() const {
  std::size_t count = 1;
  for (const auto& axis : axes) count *= axis.values.size();
  return count;
}

std::vector<std::uint16_t> DemographicSchema::labels_for_combo(std::size_t combo) const {
  std::vector<std::uint16_t> labels(axes.size(), 0);
  for (std::size_t a = axes.size(); a-- > 0;) {
    const std::size_t k = axes[a].values.size();
    labels[a] = static_cast<std::uint16_t>(combo % k);
    combo /= k;
  }
  return labels;
}

std::size_t DemographicSchema::combo_for_labels(const std::vector<std::uint16_t>& labels) const {
  std::size_t combo = 0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    combo = combo * axes[a].values.size() + labels[a];
  }
  return combo;
}

std::string DemographicSchema::combo_name(std::size_t combo) const {
  const auto labels = labels_for_combo(combo);
  std::string out;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (a > 0) out += ",";
    out += axes[a].name + "=" + axes[a].values[labels[a]];
  }
  return out;
}

json DemographicSchema::to_json() const {
  json j;
  j["axes"] = json::array();
  for (const auto& axis : axes) {
    j["axes"].push_back({{"name", axis.name}, {"values", axis.values}});
  }
  return j;
}

DemographicSchema DemographicSchema::from_json(const json& j) {
  DemographicSchema schema;
  if (!j.contains("axes") || !j["axes"].is_array()) {
    throw FormatError("schema JSON: missing 'axes' array");
  }
  for (const auto& ja : j["axes"]) {
    Axis axis;
    axis.name = ja.at("name").get<std::string>();
    axis.values = ja.at("values").get<std::vector<std::string>>();
    schema.axes.push_back(std::move(axis));
  }
  schema.validate();
  return schema;
}

// ---------------------------------------------------------------------------
// LatentDataset
// ---------------------------------------------------------------------------

void LatentDataset::validate() const {
  schema.validate();
  if (records.empty()) throw ValidationError("dataset: must contain at least one record");
  if (dim == 0) throw ValidationError("dataset: dim must be positive");
  std::set<std::uint64_t> ids;
  for (const auto& rec : records) {
    if (!ids.insert(rec.id).second) {
      throw ValidationError("dataset: duplicate record id " + std::to_string(rec.id));
    }
    if (rec.vector.size() != dim) {
      throw ValidationError("dataset: record " + std::to_string(rec.id) + " has vector length " +
                            std::to_string(rec.vector.size()) + ", expected " + std::to_string(dim));
    }
    for (double v : rec.vector) {
      if (!std::isfinite(v)) {
        throw ValidationError("dataset: record " + std::to_string(rec.id) +
                              " contains a non-finite entry");
      }
    }
    if (rec.labels.size() != schema.n_axes()) {
      throw ValidationError("dataset: record " + std::to_string(rec.id) + " has " +
                            std::to_string(rec.labels.size()) + " labels, expected " +
                            std::to_string(schema.n_axes()));
    }
    for (std::size_t a = 0; a < rec.labels.size(); ++a) {
      // label == value count is the reserved "sampled/unknown" marker
      if (rec.labels[a] > schema.axes[a].values.size()) {
        throw ValidationError("dataset: record " + std::to_string(rec.id) +
                              " label out of range on axis '" + schema.axes[a].name + "'");
      }
    }
  }
}

MatF LatentDataset::to_matrix_f() const {
  MatF m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<float>(records[i].vector[j]);
    }
  }
  return m;
}

MatD LatentDataset::to_matrix_d() const {
  MatD m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = records[i].vector[j];
    }
  }
  return m;
}

LabelMatrix LatentDataset::label_matrix() const {
  LabelMatrix m(static_cast<Eigen::Index>(records.size()),
                static_cast<Eigen::Index>(schema.n_axes()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t a = 0; a < schema.n_axes(); ++a) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = records[i].labels[a];
    }
  }
  return m;
}

void LatentDataset::set_vectors(const MatD& m) {
  if (static_cast<std::size_t>(m.rows()) != records.size()) {
    throw ShapeError("set_vectors: row count does not match record count");
  }
  dim = static_cast<std::size_t>(m.cols());
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].vector.assign(m.row(static_cast<Eigen::Index>(i)).begin(),
                             m.row(static_cast<Eigen::Index>(i)).end());
  }
}

// ---------------------------------------------------------------------------
// GroupSelector
// ---------------------------------------------------------------------------

void GroupSelector::validate_against(const DemographicSchema& schema) const {
  std::set<std::string> seen;
  for (const auto& [axis, value] : clauses) {
    if (!seen.insert(axis).second) {
      throw ValidationError("selector: duplicate clause for axis '" + axis + "'");
    }
    const int ai = schema.axis_index(axis);
    if (ai < 0) throw ValidationError("selector: unknown axis '" + axis + "'");
    if (schema.value_index(static_cast<std::size_t>(ai), value) < 0) {
      throw ValidationError("selector: unknown value '" + value + "' on axis '" + axis + "'");
    }
  }
}

bool GroupSelector::matches(const DemographicSchema& schema,
                            const std::vector<std::uint16_t>& labels) const {
  for (const auto& [axis, value] : clauses) {
    const int ai = schema.axis_index(axis);
    if (ai < 0) return false;
    const int vi = schema.value_index(static_cast<std::size_t>(ai), value);
    if (vi < 0) return false;
    if (labels[static_cast<std::size_t>(ai)] != static_cast<std::uint16_t>(vi)) return false;
  }
  return true;
}

std::string GroupSelector::name() const {
  if (clauses.empty()) return "all";
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i > 0) out += ",";
    out += clauses[i].first + "=" + clauses[i].second;
  }
  return out;
}

std::string GroupSelector::file_tag() const {
  std::string out;
  for (char c : name()) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += c;
    } else if (c == ',') {
      out += "__";
    } else {
      out += '-';
    }
  }
  return out;
}

GroupSelector GroupSelector::parse(std::string_view text) {
  GroupSelector g;
  if (text.empty() || text == "all") return g;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view clause = text.substr(pos, comma - pos);
    const std::size_t eq = clause.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == clause.size()) {
      throw ValidationError("selector: clause '" + std::string(clause) +
                            "' is not of the form axis=value");
    }
    g.clauses.emplace_back(std::string(clause.substr(0, eq)), std::string(clause.substr(eq + 1)));
    if (comma == text.size()) break;
    pos = comma + 1;
  }
  return g;
}

json GroupSelector::to_json() const {
  json j = json::array();
  for (const auto& [axis, value] : clauses) {
    j.push_back({{"axis", axis}, {"value", value}});
  }
  return j;
}

GroupSelector GroupSelector::from_json(const json& j) {
  GroupSelector g;
  for (const auto& jc : j) {
    g.clauses.emplace_back(jc.at("axis").get<std::string>(), jc.at("value").get<std::string>());
  }
  return g;
}

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

MatD Standardizer::forward_rows(const MatD& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

MatD Standardizer::inverse_rows(const MatD& x) const {
  return (x.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
}

MatF Standardizer::forward_rows(const MatF& x) const {
  return forward_rows(x.cast<double>().eval()).cast<float>();
}

MatF Standardizer::inverse_rows(const MatF& x) const {
  return inverse_rows(x.cast<double>().eval()).cast<float>();
}

// ---------------------------------------------------------------------------
// ToyGroundTruth
// ---------------------------------------------------------------------------

namespace {

json matrix_to_json(const MatD& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatD matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.at(0).size();
  MatD m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j.at(i).at(c).get<double>();
    }
  }
  return m;
}

}  // namespace

json ToyGroundTruth::to_json() const {
  return json{{"semantic_means", matrix_to_json(semantic_means)},
              {"semantic_variances", matrix_to_json(semantic_variances)},
              {"mixing", matrix_to_json(mixing)},
              {"entangler", matrix_to_json(entangler)},
              {"nonlinearity", nonlinearity},
              {"seed", seed}};
}

ToyGroundTruth ToyGroundTruth::from_json(const json& j) {
  ToyGroundTruth gt;
  gt.semantic_means = matrix_from_json(j.at("semantic_means"));
  gt.semantic_variances = matrix_from_json(j.at("semantic_variances"));
  gt.mixing = matrix_from_json(j.at("mixing"));
  gt.entangler = matrix_from_json(j.at("entangler"));
  gt.nonlinearity = j.at("nonlinearity").get<std::string>();
  gt.seed = j.at("seed").get<std::uint64_t>();
  return gt;
}

// ---------------------------------------------------------------------------
// LATD container
// ---------------------------------------------------------------------------

namespace {
constexpr char kLatdMagic[4] = {'L', 'A', 'T', 'D'};
constexpr std::uint32_t kLatdVersion = 1;
}  // namespace

void save_dataset(const LatentDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");

  os.write(kLatdMagic, 4);
  write_u32(os, kLatdVersion);
  write_u32(os, static_cast<std::uint32_t>(ds.dim));
  write_u64(os, ds.records.size());
  write_u16(os, static_cast<std::uint16_t>(ds.schema.n_axes()));
  const std::string schema_blob = ds.schema.to_json().dump();
  write_u32(os, static_cast<std::uint32_t>(schema_blob.size()));
  os.write(schema_blob.data(), static_cast<std::streamsize>(schema_blob.size()));

  std::vector<float> row(ds.dim);
  for (const auto& rec : ds.records) {
    for (std::size_t j = 0; j < ds.dim; ++j) row[j] = static_cast<float>(rec.vector[j]);
    write_f32_array(os, row.data(), row.size());
  }
  for (const auto& rec : ds.records) {
    for (std::uint16_t label : rec.labels) write_u16(os, label);
  }
  for (const auto& rec : ds.records) write_u64(os, rec.id);
  if (!os) throw IoError("write to '" + path + "' failed");
}

namespace {

LatentDataset load_dataset_latd(std::istream& is, const std::string& path) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kLatdMagic, 4) != 0) {
    throw FormatError("'" + path + "': bad LATD magic");
  }
  const std::uint32_t version = read_u32(is);
  if (version != kLatdVersion) {
    throw FormatError("'" + path + "': unsupported LATD version " + std::to_string(version));
  }
  LatentDataset ds;
  ds.dim = read_u32(is);
  const std::uint64_t n_records = read_u64(is);
  const std::uint16_t n_axes = read_u16(is);
  const std::uint32_t schema_len = read_u32(is);
  std::string schema_blob(schema_len, '\0');
  is.read(schema_blob.data(), schema_len);
  if (is.gcount() != static_cast<std::streamsize>(schema_len)) {
    throw FormatError("'" + path + "': truncated schema blob");
  }
  json schema_json;
  try {
    schema_json = json::parse(schema_blob);
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': schema blob is not valid JSON: " + e.what());
  }
  ds.schema = DemographicSchema::from_json(schema_json);
  if (ds.schema.n_axes() != n_axes) {
    throw FormatError("'" + path + "': header axis count disagrees with schema");
  }

  ds.records.resize(n_records);
  std::vector<float> row(ds.dim);
  for (auto& rec : ds.records) {
    read_f32_array(is, row.data(), row.size());
    rec.vector.assign(row.begin(), row.end());
  }
  for (auto& rec : ds.records) {
    rec.labels.resize(n_axes);
    for (std::uint16_t& label : rec.labels) label = read_u16(is);
  }
  for (auto& rec : ds.records) rec.id = read_u64(is);
  ds.validate();
  return ds;
}

LatentDataset load_dataset_jsonl(const std::string& path) {
  const std::string sidecar = path + ".schema.json";
  std::ifstream schema_is(sidecar);
  if (!schema_is) {
    throw FormatError("'" + path + "': JSON-lines dataset needs a schema sidecar at '" +
                      sidecar + "'");
  }
  json schema_json;
  try {
    schema_is >> schema_json;
  } catch (const json::exception& e) {
    throw FormatError("'" + sidecar + "': invalid JSON: " + std::string(e.what()));
  }
  LatentDataset ds;
  ds.schema = DemographicSchema::from_json(schema_json);

  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
    }
    LatentRecord rec;
    rec.id = j.at("id").get<std::uint64_t>();
    rec.vector = j.at("vector").get<std::vector<double>>();
    rec.labels = j.at("labels").get<std::vector<std::uint16_t>>();
    if (ds.records.empty()) ds.dim = rec.vector.size();
    ds.records.push_back(std::move(rec));
  }
  ds.validate();
  return ds;
}

}  // namespace

LatentDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  if (is.gcount() == 4 && std::memcmp(magic, kLatdMagic, 4) == 0) {
    is.seekg(0);
    return load_dataset_latd(is, path);
  }
  return load_dataset_jsonl(path);
}

void save_dataset_jsonl(const LatentDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& rec : ds.records) {
    json j;
    j["id"] = rec.id;
    j["vector"] = rec.vector;
    j["labels"] = rec.labels;
    os << j.dump() << "\n";
  }
  std::ofstream schema_os(path + ".schema.json", std::ios::trunc);
  if (!schema_os) throw IoError("cannot open schema sidecar for writing");
  schema_os << ds.schema.to_json().dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Toy data synthesis
// ---------------------------------------------------------------------------

MatD random_orthonormal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (cols > rows) throw ValidationError("random_orthonormal: cols must be <= rows");
  RandomSource rng(seed);
  MatD g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<MatD> qr(g);
  MatD q = qr.householderQ() * MatD::Identity(static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(cols));
  const MatD r = qr.matrixQR().topLeftCorner(g.cols(), g.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

std::pair<LatentDataset, ToyGroundTruth> synth_toy_dataset(const ToyDatasetSpec& spec) {
  spec.schema.validate();
  const std::size_t n_axes = spec.schema.n_axes();
  if (spec.sem_dim < 2 || spec.sem_dim < n_axes) {
    throw ValidationError("synth_toy_dataset: sem_dim must be >= max(2, number of axes)");
  }
  if (spec.dim < spec.sem_dim) {
    throw ValidationError("synth_toy_dataset: dim must be >= sem_dim");
  }
  if (spec.n_per_group == 0) throw ValidationError("synth_toy_dataset: n_per_group must be > 0");
  if (!(spec.separation >= 0.0)) {
    throw ValidationError("synth_toy_dataset: separation must be >= 0");
  }

  const std::size_t groups = spec.schema.group_count();
  ToyGroundTruth gt;
  gt.seed = spec.seed;
  gt.semantic_means = MatD::Zero(static_cast<Eigen::Index>(groups),
                                 static_cast<Eigen::Index>(spec.sem_dim));
  gt.semantic_variances = MatD::Ones(static_cast<Eigen::Index>(groups),
                                     static_cast<Eigen::Index>(spec.sem_dim));
  for (std::size_t g = 0; g < groups; ++g) {
    const auto labels = spec.schema.labels_for_combo(g);
    // One semantic dimension per axis; group means sit on a lattice with
    // spacing `separation` (hypercube corners for binary axes).
    for (std::size_t a = 0; a < n_axes; ++a) {
      gt.semantic_means(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(a)) =
          spec.separation * labels[a];
    }
  }
  gt.mixing = random_orthonormal(spec.dim, spec.sem_dim, mix_seed(spec.seed, "toy-mixing"));
  gt.entangler = random_orthonormal(spec.dim, spec.dim, mix_seed(spec.seed, "toy-entangler"));

  LatentDataset ds;
  ds.schema = spec.schema;
  ds.dim = spec.dim;
  ds.records.reserve(groups * spec.n_per_group);
  std::uint64_t next_id = 0;
  VecD z(static_cast<Eigen::Index>(spec.sem_dim));
  for (std::size_t g = 0; g < groups; ++g) {
    RandomSource rng(mix_seed(spec.seed, "toy-samples", g));
    const auto labels = spec.schema.labels_for_combo(g);
    for (std::size_t k = 0; k < spec.n_per_group; ++k) {
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        z(j) = gt.semantic_means(static_cast<Eigen::Index>(g), j) +
               std::sqrt(gt.semantic_variances(static_cast<Eigen::Index>(g), j)) * rng.normal();
      }
      const VecD x = gt.mixing * z;
      const VecD y = x + 0.5 * (gt.entangler * x).array().tanh().matrix();
      LatentRecord rec;
      rec.id = next_id++;
      rec.labels = labels;
      rec.vector.resize(spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        rec.vector[j] = static_cast<float>(y(static_cast<Eigen::Index>(j)));
      }
      ds.records.push_back(std::move(rec));
    }
  }
  ds.validate();
  return {std::move(ds), std::move(gt)};
}

// ---------------------------------------------------------------------------
// Splitting / selection / standardization / batching
// ---------------------------------------------------------------------------

SplitResult split_dataset(const LatentDataset& ds, double test_fraction,
                          std::uint64_t seed, bool stratified) {
  ds.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("split_dataset: test_fraction must lie in (0, 1)");
  }

  std::vector<std::size_t> test_indices;
  if (stratified) {
    std::map<std::size_t, std::vector<std::size_t>> by_combo;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
      by_combo[ds.schema.combo_for_labels(ds.records[i].labels)].push_back(i);
    }
    for (auto& [combo, indices] : by_combo) {
      if (indices.size() < 2) {
        throw ValidationError("split_dataset: group '" + ds.schema.combo_name(combo) +
                              "' has fewer than 2 records");
      }
      RandomSource rng(mix_seed(seed, "split", combo));
      rng.shuffle(indices);
      std::size_t n_test = static_cast<std::size_t>(
          std::floor(static_cast<double>(indices.size()) * test_fraction));
      n_test = std::min(n_test, indices.size() - 1);  // train keeps >= 1 per group
      test_indices.insert(test_indices.end(), indices.begin(), indices.begin() + n_test);
    }
  } else {
    std::vector<std::size_t> indices(ds.records.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    RandomSource rng(mix_seed(seed, "split"));
    rng.shuffle(indices);
    std::size_t n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(indices.size()) * test_fraction));
    n_test = std::min(n_test, indices.size() - 1);
    test_indices.assign(indices.begin(), indices.begin() + n_test);
  }

  std::vector<bool> is_test(ds.records.size(), false);
  for (std::size_t i : test_indices) is_test[i] = true;

  SplitResult out;
  out.train.schema = ds.schema;
  out.train.dim = ds.dim;
  out.test.schema = ds.schema;
  out.test.dim = ds.dim;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    (is_test[i] ? out.test : out.train).records.push_back(ds.records[i]);
  }
  if (out.test.records.empty()) {
    throw ValidationError("split_dataset: test split is empty; increase test_fraction");
  }
  return out;
}

LatentDataset select_group(const LatentDataset& ds, const GroupSelector& g) {
  g.validate_against(ds.schema);
  LatentDataset out;
  out.schema = ds.schema;
  out.dim = ds.dim;
  for (const auto& rec : ds.records) {
    if (g.matches(ds.schema, rec.labels)) out.records.push_back(rec);
  }
  if (out.records.empty()) {
    throw ValidationError("select_group: no records match selector '" + g.name() + "'");
  }
  return out;
}

Standardizer fit_standardizer(const LatentDataset& ds) {
  ds.validate();
  const MatD x = ds.to_matrix_d();
  const double n = static_cast<double>(x.rows());
  Standardizer st;
  st.mean = x.colwise().sum() / n;
  const MatD centered = x.rowwise() - st.mean.transpose();
  const VecD var = centered.array().square().colwise().sum() / n;
  st.scale.resize(var.size());
  std::size_t clamped = 0;
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    const double s = std::sqrt(var(j));
    if (s < Standardizer::kScaleFloor) {
      st.scale(j) = Standardizer::kScaleFloor;
      ++clamped;
    } else {
      st.scale(j) = s;
    }
  }
  if (clamped > 0) {
    log_warn("fit_standardizer: " + std::to_string(clamped) +
             " zero-variance dimension(s) clamped to the scale floor");
  }
  return st;
}

LatentDataset apply_standardizer(const Standardizer& st, const LatentDataset& ds,
                                 StandardizeDirection direction) {
  if (st.dim() != ds.dim) {
    throw ShapeError("apply_standardizer: standardizer dim " + std::to_string(st.dim()) +
                     " does not match dataset dim " + std::to_string(ds.dim));
  }
  LatentDataset out = ds;
  const MatD x = ds.to_matrix_d();
  out.set_vectors(direction == StandardizeDirection::forward ? st.forward_rows(x)
                                                             : st.inverse_rows(x));
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(const LatentDataset& ds,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::uint64_t epoch) {
  if (batch_size < 2) {
    throw ValidationError("make_batches: batch_size must be >= 2 (contrastive pairs)");
  }
  std::vector<std::size_t> order(ds.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RandomSource rng(mix_seed(seed, "batches", epoch));
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    if (end - start < 2) break;  // a trailing singleton cannot form pairs
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace latmod
