#include "sensr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "sensr/errors.hpp"
#include "sensr/parallel.hpp"

namespace sensr {

double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size() || preds.empty())
    throw ConfigError("balanced_accuracy: size mismatch");
  const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());
  std::vector<double> correct(num_classes, 0.0), total(num_classes, 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total[labels[i]] += 1.0;
    if (preds[i] == labels[i]) correct[labels[i]] += 1.0;
  }
  double acc = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (total[c] == 0.0) continue;
    acc += correct[c] / total[c];
    ++present;
  }
  return acc / static_cast<double>(present);
}

double plain_accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size() || preds.empty())
    throw ConfigError("accuracy: size mismatch");
  double c = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) c += 1.0;
  return c / static_cast<double>(preds.size());
}

TprGaps tpr_gaps(const std::vector<int>& preds, const std::vector<int>& labels,
                 const std::vector<int>& attribute) {
  if (preds.size() != labels.size() || labels.size() != attribute.size() || preds.empty())
    throw ConfigError("tpr_gaps: size mismatch");
  const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());

  TprGaps out;
  for (int c = 0; c < num_classes; ++c) {
    double correct[2] = {0.0, 0.0}, total[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (labels[i] != c) continue;
      const int a = attribute[i] == 0 ? 0 : 1;
      total[a] += 1.0;
      if (preds[i] == c) correct[a] += 1.0;
    }
    if (total[0] == 0.0 && total[1] == 0.0) continue;  // class absent entirely
    if (total[0] == 0.0 || total[1] == 0.0) {
      std::cerr << "warning: tpr gap undefined for class " << c
                << " (one attribute group empty); excluded\n";
      out.skipped.push_back(c);
      continue;
    }
    out.per_class.push_back(correct[0] / total[0] - correct[1] / total[1]);
    out.classes.push_back(c);
  }
  if (!out.per_class.empty()) {
    double sq = 0.0;
    for (double g : out.per_class) {
      sq += g * g;
      out.max = std::max(out.max, std::abs(g));
    }
    out.rms = std::sqrt(sq / static_cast<double>(out.per_class.size()));
  }
  return out;
}

VariantGenerator spouse_variants() {
  return [](std::span<const double> x, const FeatureMeta& meta) {
    const auto pair = counterfactual_spouse(x, meta);
    return std::vector<Vector>{pair[0], pair[1]};
  };
}

VariantGenerator gender_race_variants() {
  return [](std::span<const double> x, const FeatureMeta& meta) {
    const auto quad = counterfactual_gender_race(x, meta);
    return std::vector<Vector>(quad.begin(), quad.end());
  };
}

double consistency(const ModelParams& params, const TabularDataset& data,
                   const VariantGenerator& variants, const Matrix* input_transform) {
  if (data.size() == 0) throw ConfigError("consistency: empty dataset");
  std::vector<char> consistent(data.size(), 0);
  parallel_for(data.size(), [&](std::size_t i) {
    ModelWorkspace ws;
    Vector logits;
    auto vars = variants(data.features.row(i), data.meta);
    int first = -1;
    bool same = true;
    for (const auto& v : vars) {
      const Vector input = input_transform ? matvec(*input_transform, v) : v;
      forward(params, input, logits, ws);
      const int cls = predict_class(logits);
      if (first < 0)
        first = cls;
      else if (cls != first)
        same = false;
    }
    consistent[i] = same ? 1 : 0;
  });
  double c = 0.0;
  for (char f : consistent) c += f;
  return c / static_cast<double>(data.size());
}

double group_logit_gap(const ModelParams& params, const Matrix& group0, const Matrix& group1) {
  if (params.num_classes < 2) throw ConfigError("group_logit_gap: needs >= 2 classes");
  ModelWorkspace ws;
  Vector logits;
  auto mean_gap = [&](const Matrix& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      forward(params, g.row(i), logits, ws);
      s += logits[1] - logits[0];
    }
    return s / static_cast<double>(g.rows());
  };
  if (group0.rows() == 0 || group1.rows() == 0)
    throw ConfigError("group_logit_gap: empty group");
  return mean_gap(group0) - mean_gap(group1);
}

std::vector<int> predict_all(const ModelParams& params, const TabularDataset& data,
                             const Matrix* input_transform) {
  std::vector<int> preds(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    ModelWorkspace ws;
    Vector logits;
    if (input_transform) {
      const Vector input = matvec(*input_transform, data.features.row(i));
      forward(params, input, logits, ws);
    } else {
      forward(params, data.features.row(i), logits, ws);
    }
    preds[i] = predict_class(logits);
  });
  return preds;
}

EvalReport evaluate(const ModelParams& params, const TabularDataset& data,
                    const Matrix* input_transform) {
  EvalReport r;
  const auto preds = predict_all(params, data, input_transform);
  r.accuracy = plain_accuracy(preds, data.labels);
  r.balanced_accuracy = balanced_accuracy(preds, data.labels);

  for (const auto& [name, attr] : data.protected_attrs) {
    const TprGaps gaps = tpr_gaps(preds, data.labels, attr);
    r.gap_rms[name] = gaps.rms;
    r.gap_max[name] = gaps.max;

    // Split rows by attribute for the logit-gap comparison.
    std::vector<Vector> g0, g1;
    for (std::size_t i = 0; i < data.size(); ++i) {
      Vector row(data.features.row(i).begin(), data.features.row(i).end());
      if (input_transform) row = matvec(*input_transform, row);
      (attr[i] == 0 ? g0 : g1).push_back(std::move(row));
    }
    if (!g0.empty() && !g1.empty() && params.num_classes == 2)
      r.group_logit_gaps[name] =
          group_logit_gap(params, Matrix::from_rows(g0), Matrix::from_rows(g1));
  }

  if (data.meta.category_index("relationship", "Husband") >= 0)
    r.s_con = consistency(params, data, spouse_variants(), input_transform);
  if (data.meta.index_of("gender") >= 0 && data.meta.index_of("race") >= 0)
    r.gr_con = consistency(params, data, gender_race_variants(), input_transform);
  return r;
}

}  // namespace sensr
