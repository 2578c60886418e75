#ifndef SENSR_DATA_HPP
#define SENSR_DATA_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sensr/linalg.hpp"

namespace sensr {

enum class ColKind { continuous, binary, onehot };

struct FeatureColumn {
  std::string name;
  ColKind kind = ColKind::continuous;
  int group = -1;            // one-hot group id, -1 otherwise
  std::string category;      // one-hot category label
  double mean = 0.0;         // scaler stats (identity scaling: 0/1)
  double stdev = 1.0;
};

struct FeatureMeta {
  std::vector<FeatureColumn> columns;

  std::size_t dim() const { return columns.size(); }
  // -1 when absent.
  int index_of(const std::string& name) const;
  std::vector<std::size_t> group_columns(int group) const;
  // Column index of a one-hot category within a named group, -1 when absent.
  int category_index(const std::string& group_name, const std::string& category) const;
  double scaled(std::size_t col, double raw) const {
    return (raw - columns[col].mean) / columns[col].stdev;
  }
};

struct TabularDataset {
  Matrix features;  // n x d, standardized
  std::vector<int> labels;
  int num_classes = 2;
  std::map<std::string, std::vector<int>> protected_attrs;
  FeatureMeta meta;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  void validate() const;  // throws on broken invariants
};

struct DatasetSplit {
  TabularDataset train;
  TabularDataset test;
};

// UCI Adult ingestion: drops fnlwgt/education/native-country, keeps
// education-num; binarizes race (White vs rest) and sex (Male = 1); one-hot
// encodes workclass, marital-status, occupation, relationship; drops rows
// with any "?" field; label = income >= 50k. Rows from all given files are
// pooled, split 80/20 by split_seed, and every encoded column is
// standardized with a scaler fit on the train split. Emits a warning (not an
// error) if the pooled row count differs from the canonical 45,222.
DatasetSplit load_adult(const std::string& train_path,
                        const std::optional<std::string>& test_path,
                        std::uint64_t split_seed, std::string* warning = nullptr);

struct ToyConfig {
  std::uint64_t seed = 7;
  std::size_t n_major = 1000;
  std::size_t n_minor = 100;
  double separation = 4.0;
  double noise = 0.5;
  double minority_pos_frac = 0.5;  // exact per-group class counts
  double group_spread = 0.5;       // horizontal scatter within each group
  // Within the majority the horizontal coordinate tracks the class signal, so
  // an ERM fit leans on it as a label proxy; the correlation is absent in the
  // offset minority, where the proxy then misfires.
  double majority_align = 0.8;
};

// 2-d dataset: feature 0 is the sensitive (horizontal) coordinate with the
// minority offset by `separation`; feature 1 carries the label signal
// (vertical coordinate ±1 plus Gaussian noise). Protected attribute "group"
// (minority = 1). Exact per-group class counts.
TabularDataset make_toy(const ToyConfig& cfg);

// Spouse counterfactuals: copies of x with the relationship one-hot group set
// to Husband and to Wife (written in scaled units via the column scalers).
std::array<Vector, 2> counterfactual_spouse(std::span<const double> x, const FeatureMeta& meta);

// The 4 gender x race combinations written into x's encoding.
std::array<Vector, 4> counterfactual_gender_race(std::span<const double> x,
                                                 const FeatureMeta& meta);

// Generic numeric CSV with a header row; label and protected columns pulled
// out by name, everything else becomes a continuous feature (no scaling).
TabularDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& protected_columns);

// Reproducibility snapshot: standardized features + label + protected columns.
void write_dataset_csv(const std::string& path, const TabularDataset& ds);

}  // namespace sensr

#endif
