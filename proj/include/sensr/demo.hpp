#ifndef SENSR_DEMO_HPP
#define SENSR_DEMO_HPP

#include <cstdint>
#include <string>

#include "sensr/data.hpp"

namespace sensr {

struct ToyDemoConfig {
  std::string out_dir = "toy-demo";
  std::uint64_t seed = 7;
  std::size_t epochs = 3000;       // 0 = audit the initialization
  std::size_t batch_size = 100;
  double epsilon = 1e-3;
  ToyConfig toy;                   // toy.seed is overridden by `seed`
  std::size_t grid = 240;          // heatmap resolution
};

struct ToyDemoResult {
  double baseline_gap = 0.0;
  double sensr_gap = 0.0;
  double baseline_horizontal_shift = 0.0;  // unfair-map mean |dh|
  double baseline_vertical_shift = 0.0;    // unfair-map mean |dv|
  double baseline_acc_major = 0.0;
  double baseline_acc_minor = 0.0;
  double sensr_acc_major = 0.0;
  double sensr_acc_minor = 0.0;
};

// End-to-end toy pipeline: generates the two-group data, trains the baseline
// and SenSR logistic models, audits both, and writes into out_dir the data
// CSV, both checkpoints, both audit reports, three decision-heatmap PPM
// images (baseline, unfair map, SenSR) and demo_report.json. Deterministic
// for a fixed seed and thread count.
ToyDemoResult run_toy_demo(const ToyDemoConfig& cfg);

}  // namespace sensr

#endif
