#include "sensr/demo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sensr/auditor.hpp"
#include "sensr/errors.hpp"
#include "sensr/io.hpp"
#include "sensr/metrics.hpp"
#include "sensr/trainer.hpp"

namespace sensr {

namespace {

// Minimal raster canvas written out as binary PPM.
struct Canvas {
  std::size_t w, h;
  std::vector<unsigned char> px;  // rgb

  Canvas(std::size_t w_, std::size_t h_) : w(w_), h(h_), px(w_ * h_ * 3, 255) {}

  void set(long x, long y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return;
    const std::size_t at = 3 * (static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x));
    px[at] = r;
    px[at + 1] = g;
    px[at + 2] = b;
  }

  void square(long x, long y, long half, unsigned char r, unsigned char g, unsigned char b) {
    for (long dy = -half; dy <= half; ++dy)
      for (long dx = -half; dx <= half; ++dx) set(x + dx, y + dy, r, g, b);
  }

  void segment(long x0, long y0, long x1, long y1, unsigned char r, unsigned char g,
               unsigned char b) {
    const long steps = std::max(std::labs(x1 - x0), std::labs(y1 - y0));
    for (long s = 0; s <= steps; ++s) {
      const double t = steps == 0 ? 0.0 : static_cast<double>(s) / static_cast<double>(steps);
      set(std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), r, g, b);
    }
  }

  void write_ppm(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) throw IoError("write failed: " + path);
  }
};

struct Box {
  double hmin, hmax, vmin, vmax;
};

Box data_box(const TabularDataset& ds) {
  Box b{ds.features(0, 0), ds.features(0, 0), ds.features(0, 1), ds.features(0, 1)};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    b.hmin = std::min(b.hmin, ds.features(i, 0));
    b.hmax = std::max(b.hmax, ds.features(i, 0));
    b.vmin = std::min(b.vmin, ds.features(i, 1));
    b.vmax = std::max(b.vmax, ds.features(i, 1));
  }
  b.hmin -= 1.0;
  b.hmax += 1.0;
  b.vmin -= 1.0;
  b.vmax += 1.0;
  return b;
}

// Blue (score 0) through white to red (score 1).
void score_color(double s, unsigned char& r, unsigned char& g, unsigned char& b) {
  s = std::clamp(s, 0.0, 1.0);
  if (s < 0.5) {
    const double t = s / 0.5;
    r = static_cast<unsigned char>(std::lround(120 + 135 * t));
    g = static_cast<unsigned char>(std::lround(160 + 95 * t));
    b = 255;
  } else {
    const double t = (s - 0.5) / 0.5;
    r = 255;
    g = static_cast<unsigned char>(std::lround(255 - 115 * t));
    b = static_cast<unsigned char>(std::lround(255 - 135 * t));
  }
}

Canvas render_heatmap(const ModelParams& params, const Box& box, std::size_t grid) {
  Canvas canvas(grid, grid);
  ModelWorkspace ws;
  Vector logits, x(2);
  for (std::size_t py = 0; py < grid; ++py) {
    for (std::size_t px = 0; px < grid; ++px) {
      x[0] = box.hmin + (box.hmax - box.hmin) * (px + 0.5) / grid;
      x[1] = box.vmax - (box.vmax - box.vmin) * (py + 0.5) / grid;
      forward(params, x, logits, ws);
      const double m = std::max(logits[0], logits[1]);
      const double p1 = std::exp(logits[1] - m) / (std::exp(logits[0] - m) + std::exp(logits[1] - m));
      unsigned char r, g, b;
      score_color(p1, r, g, b);
      canvas.set(static_cast<long>(px), static_cast<long>(py), r, g, b);
    }
  }
  return canvas;
}

long to_px(double v, double lo, double hi, std::size_t grid) {
  return std::lround((v - lo) / (hi - lo) * (grid - 1));
}

void draw_points(Canvas& canvas, const TabularDataset& ds, const Box& box) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const long px = to_px(ds.features(i, 0), box.hmin, box.hmax, canvas.w);
    const long py = to_px(box.vmax + box.vmin - ds.features(i, 1), box.vmin, box.vmax, canvas.h);
    if (ds.labels[i] == 1)
      canvas.square(px, py, 1, 170, 20, 20);
    else
      canvas.square(px, py, 1, 20, 40, 170);
  }
}

double group_accuracy(const std::vector<int>& preds, const TabularDataset& ds, int group) {
  const auto& g = ds.protected_attrs.at("group");
  double correct = 0.0, total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (g[i] != group) continue;
    total += 1.0;
    if (preds[i] == ds.labels[i]) correct += 1.0;
  }
  return total == 0.0 ? 0.0 : correct / total;
}

}  // namespace

ToyDemoResult run_toy_demo(const ToyDemoConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.out_dir);
  auto path = [&cfg](const std::string& name) { return cfg.out_dir + "/" + name; };

  ToyConfig toy = cfg.toy;
  toy.seed = cfg.seed;
  const TabularDataset train = make_toy(toy);
  ToyConfig toy_test = toy;
  toy_test.seed = cfg.seed + 1;
  const TabularDataset test = make_toy(toy_test);
  write_dataset_csv(path("toy_train.csv"), train);
  write_dataset_csv(path("toy_test.csv"), test);

  // Sensitive direction = the horizontal axis separating the groups.
  Matrix dir(2, 1);
  dir(0, 0) = 1.0;
  const FairMetric metric = FairMetric::from_subspace(SensitiveSubspace::from_directions(dir));
  save_subspace(path("metric.json"), metric.subspace);

  AttackConfig attack;
  attack.subspace_step = 0.5;
  attack.subspace_epochs = 30;
  attack.full_step = cfg.epsilon / 10.0;
  attack.full_epochs = 10;

  TrainConfig base_cfg;
  base_cfg.mode = TrainMode::baseline;
  base_cfg.epochs = std::max<std::size_t>(cfg.epochs, 1);
  base_cfg.batch_size = cfg.batch_size;
  base_cfg.epsilon = 0.0;
  base_cfg.theta_step = 0.01;
  base_cfg.seed = cfg.seed;
  base_cfg.attack = AttackConfig{0.0, 0, 0.0, 0};

  const ArchSpec arch{Arch::logistic, 0};

  ModelParams baseline = ModelParams::init(arch.arch, 2, 2, 0, cfg.seed);
  ModelParams sensr_model = baseline;
  if (cfg.epochs > 0) {
    baseline = train_baseline(train, arch, base_cfg).params;

    TrainConfig sensr_cfg = base_cfg;
    sensr_cfg.mode = TrainMode::sensr;
    sensr_cfg.epsilon = cfg.epsilon;
    sensr_cfg.lambda_step = 0.05;
    sensr_cfg.attack = attack;
    sensr_model = train_sensr(train, metric, arch, sensr_cfg).params;
  }
  save_model(path("baseline_model.json"), baseline);
  save_model(path("sensr_model.json"), sensr_model);

  AuditConfig audit_cfg;
  audit_cfg.epsilon = cfg.epsilon;
  audit_cfg.lambda_step = 0.05;
  audit_cfg.batch_size = 64;
  audit_cfg.max_iters = 400;
  audit_cfg.seed = cfg.seed;
  audit_cfg.attack = attack;

  const AuditReport base_report = audit(baseline, metric, train, audit_cfg);
  const AuditReport sensr_report = audit(sensr_model, metric, train, audit_cfg);
  save_audit_report(path("baseline_audit.json"), base_report);
  save_audit_report(path("sensr_audit.json"), sensr_report);

  ToyDemoResult res;
  res.baseline_gap = base_report.certificate_gap;
  res.sensr_gap = sensr_report.certificate_gap;
  double dh = 0.0, dv = 0.0;
  for (const auto& s : base_report.per_sample) {
    dh += std::abs(s.x_star[0] - train.features(s.index, 0));
    dv += std::abs(s.x_star[1] - train.features(s.index, 1));
  }
  res.baseline_horizontal_shift = dh / static_cast<double>(base_report.per_sample.size());
  res.baseline_vertical_shift = dv / static_cast<double>(base_report.per_sample.size());

  const auto base_preds = predict_all(baseline, test);
  const auto sensr_preds = predict_all(sensr_model, test);
  res.baseline_acc_major = group_accuracy(base_preds, test, 0);
  res.baseline_acc_minor = group_accuracy(base_preds, test, 1);
  res.sensr_acc_major = group_accuracy(sensr_preds, test, 0);
  res.sensr_acc_minor = group_accuracy(sensr_preds, test, 1);

  // Heatmap panels: baseline decision, unfair map on the baseline, SenSR decision.
  const Box box = data_box(train);
  {
    Canvas c = render_heatmap(baseline, box, cfg.grid);
    draw_points(c, train, box);
    c.write_ppm(path("heatmap_baseline.ppm"));
  }
  {
    Canvas c = render_heatmap(baseline, box, cfg.grid);
    for (std::size_t i = 0; i < base_report.per_sample.size(); i += 4) {
      const auto& s = base_report.per_sample[i];
      const long x0 = to_px(train.features(s.index, 0), box.hmin, box.hmax, cfg.grid);
      const long y0 = to_px(box.vmax + box.vmin - train.features(s.index, 1), box.vmin, box.vmax, cfg.grid);
      const long x1 = to_px(s.x_star[0], box.hmin, box.hmax, cfg.grid);
      const long y1 = to_px(box.vmax + box.vmin - s.x_star[1], box.vmin, box.vmax, cfg.grid);
      c.segment(x0, y0, x1, y1, 60, 60, 60);
      c.square(x1, y1, 1, 0, 0, 0);
    }
    c.write_ppm(path("heatmap_unfair_map.ppm"));
  }
  {
    Canvas c = render_heatmap(sensr_model, box, cfg.grid);
    draw_points(c, train, box);
    c.write_ppm(path("heatmap_sensr.ppm"));
  }

  nlohmann::json j;
  j["baseline"] = {{"certificate_gap", res.baseline_gap},
                   {"mean_horizontal_shift", res.baseline_horizontal_shift},
                   {"mean_vertical_shift", res.baseline_vertical_shift},
                   {"acc_major", res.baseline_acc_major},
                   {"acc_minor", res.baseline_acc_minor}};
  j["sensr"] = {{"certificate_gap", res.sensr_gap},
                {"acc_major", res.sensr_acc_major},
                {"acc_minor", res.sensr_acc_minor}};
  j["sensr_gap_below_baseline"] = res.sensr_gap < res.baseline_gap;
  std::ofstream out(path("demo_report.json"));
  if (!out) throw IoError("cannot write demo_report.json");
  out << j.dump(2) << "\n";
  return res;
}

}  // namespace sensr
