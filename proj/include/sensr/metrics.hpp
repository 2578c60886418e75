#ifndef SENSR_METRICS_HPP
#define SENSR_METRICS_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sensr/data.hpp"
#include "sensr/model.hpp"

namespace sensr {

// Mean over classes of per-class recall.
double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

double plain_accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

struct TprGaps {
  double rms = 0.0;
  double max = 0.0;
  std::vector<double> per_class;  // gap_c = TPR_{0,c} - TPR_{1,c}
  std::vector<int> classes;       // class ids with a defined gap
  std::vector<int> skipped;       // classes missing one attribute group
};

// Between-group true-positive-rate gaps for a binary attribute. Classes where
// one group is absent are excluded with a warning recorded in `skipped`.
TprGaps tpr_gaps(const std::vector<int>& preds, const std::vector<int>& labels,
                 const std::vector<int>& attribute);

using VariantGenerator =
    std::function<std::vector<Vector>(std::span<const double>, const FeatureMeta&)>;

VariantGenerator spouse_variants();
VariantGenerator gender_race_variants();

// Fraction of points whose predicted class is identical across all generated
// variants. `input_transform`, when given, is applied to each variant before
// the forward pass (projection for project-trained models).
double consistency(const ModelParams& params, const TabularDataset& data,
                   const VariantGenerator& variants, const Matrix* input_transform = nullptr);

// mean_{group0}(logit1 - logit0) - mean_{group1}(logit1 - logit0).
double group_logit_gap(const ModelParams& params, const Matrix& group0, const Matrix& group1);

struct EvalReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  // keyed by protected attribute name
  std::map<std::string, double> gap_rms;
  std::map<std::string, double> gap_max;
  std::map<std::string, double> group_logit_gaps;
  double s_con = -1.0;   // -1 when the dataset lacks the relationship group
  double gr_con = -1.0;  // -1 when gender/race columns are absent
};

// Full evaluation used by the CLI; consistency metrics are computed when the
// dataset meta carries the needed columns.
EvalReport evaluate(const ModelParams& params, const TabularDataset& data,
                    const Matrix* input_transform = nullptr);

std::vector<int> predict_all(const ModelParams& params, const TabularDataset& data,
                             const Matrix* input_transform = nullptr);

}  // namespace sensr

#endif
