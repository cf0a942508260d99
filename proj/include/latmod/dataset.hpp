#ifndef LATMOD_DATASET_HPP
#define LATMOD_DATASET_HPP

#include "latmod/core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace latmod {

// Ordered demographic axes, each with >= 2 named values. Record labels are
// value indices per axis; the value `axis.values.size()` is reserved as the
// "sampled/unknown" marker on generated datasets.
struct DemographicSchema {
  struct Axis {
    std::string name;
    std::vector<std::string> values;
  };
  std::vector<Axis> axes;

  void validate() const;
  std::size_t n_axes() const { return axes.size(); }
  int axis_index(std::string_view name) const;  // -1 if absent
  int value_index(std::size_t axis, std::string_view value) const;

  // Full group combinations, enumerated in mixed-radix order (last axis fastest).
  std::size_t group_count() const;
  std::vector<std::uint16_t> labels_for_combo(std::size_t combo) const;
  std::size_t combo_for_labels(const std::vector<std::uint16_t>& labels) const;
  std::string combo_name(std::size_t combo) const;  // "axis=value,axis=value"

  nlohmann::json to_json() const;
  static DemographicSchema from_json(const nlohmann::json& j);

  bool operator==(const DemographicSchema&) const = default;
};

struct LatentRecord {
  std::uint64_t id = 0;
  std::vector<double> vector;          // latent code; serialized as f32
  std::vector<std::uint16_t> labels;   // one value index per axis
};

struct LatentDataset {
  DemographicSchema schema;
  std::size_t dim = 0;
  std::vector<LatentRecord> records;

  void validate() const;
  std::size_t size() const { return records.size(); }

  MatF to_matrix_f() const;
  MatD to_matrix_d() const;
  LabelMatrix label_matrix() const;

  // Replaces all record vectors with the rows of `m` (row per record).
  void set_vectors(const MatD& m);
};

// Conjunction of (axis, value) clauses; empty clause list selects everything.
struct GroupSelector {
  std::vector<std::pair<std::string, std::string>> clauses;

  void validate_against(const DemographicSchema& schema) const;
  bool matches(const DemographicSchema& schema, const std::vector<std::uint16_t>& labels) const;
  std::string name() const;            // "axis=value,axis=value" ("all" when empty)
  std::string file_tag() const;        // filesystem-safe form of name()

  static GroupSelector parse(std::string_view text);  // "axis=value,axis=value"
  nlohmann::json to_json() const;
  static GroupSelector from_json(const nlohmann::json& j);

  bool operator==(const GroupSelector&) const = default;
};

// Per-dimension affine standardization; scale is floored at kScaleFloor.
struct Standardizer {
  VecD mean;
  VecD scale;

  static constexpr double kScaleFloor = 1e-8;
  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

  VecD forward(const VecD& x) const { return (x - mean).cwiseQuotient(scale); }
  VecD inverse(const VecD& x) const { return x.cwiseProduct(scale) + mean; }
  MatD forward_rows(const MatD& x) const;
  MatD inverse_rows(const MatD& x) const;
  MatF forward_rows(const MatF& x) const;
  MatF inverse_rows(const MatF& x) const;
};

enum class StandardizeDirection { forward, inverse };

// Generating process of the synthetic toy data, kept for oracle checks:
// z ~ N(mean_g, diag cov) in semantic space, x = Q z, y = x + 0.5 tanh(R x).
struct ToyGroundTruth {
  MatD semantic_means;       // group_count x sem_dim
  MatD semantic_variances;   // group_count x sem_dim (diagonal covariances)
  MatD mixing;               // dim x sem_dim, orthonormal columns
  MatD entangler;            // dim x dim, orthogonal
  std::string nonlinearity = "tanh-contraction-0.5";
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ToyGroundTruth from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

LatentDataset load_dataset(const std::string& path);
void save_dataset(const LatentDataset& ds, const std::string& path);

// JSON-lines alternative for hand-written fixtures; the schema lives in a
// sidecar file at `<path>.schema.json`.
void save_dataset_jsonl(const LatentDataset& ds, const std::string& path);

struct ToyDatasetSpec {
  DemographicSchema schema;
  std::size_t n_per_group = 500;
  std::size_t sem_dim = 8;
  std::size_t dim = 64;
  double separation = 4.0;
  std::uint64_t seed = 0;
};

std::pair<LatentDataset, ToyGroundTruth> synth_toy_dataset(const ToyDatasetSpec& spec);

struct SplitResult {
  LatentDataset train;
  LatentDataset test;
};

SplitResult split_dataset(const LatentDataset& ds, double test_fraction,
                          std::uint64_t seed, bool stratified = true);

LatentDataset select_group(const LatentDataset& ds, const GroupSelector& g);

Standardizer fit_standardizer(const LatentDataset& ds);
LatentDataset apply_standardizer(const Standardizer& st, const LatentDataset& ds,
                                 StandardizeDirection direction);

std::vector<std::vector<std::size_t>> make_batches(const LatentDataset& ds,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::uint64_t epoch);

// Seeded random orthogonal/orthonormal-column matrices (QR of a Gaussian
// matrix with the sign convention diag(R) > 0).
MatD random_orthonormal(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace latmod

#endif  // LATMOD_DATASET_HPP
