// sensr: learn fair metrics, train/audit/evaluate classifiers that are robust
// to sensitive-subspace perturbations, and run the 2-d toy demonstration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sensr/auditor.hpp"
#include "sensr/data.hpp"
#include "sensr/demo.hpp"
#include "sensr/errors.hpp"
#include "sensr/fair_metric.hpp"
#include "sensr/io.hpp"
#include "sensr/metrics.hpp"
#include "sensr/model.hpp"
#include "sensr/parallel.hpp"
#include "sensr/trainer.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw sensr::ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

void require_file(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) return;
  const auto p = j[key].get<std::string>();
  if (!fs::exists(p))
    throw sensr::ConfigError("config: " + where + "." + key + " file does not exist: " + p);
}

// Run configuration file. Every block is optional; CLI flags that were given
// explicitly override the file.
struct RunConfig {
  json train = json::object();
  json audit = json::object();
  json attack = json::object();
  json data = json::object();
  json metric = json::object();
  std::uint64_t seed = 0;
  int threads = 0;
  bool has_seed = false;
};

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sensr::IoError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw sensr::ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(j, {"seed", "threads", "train", "audit", "attack", "data", "metric"}, "root");
  RunConfig cfg;
  if (j.contains("seed")) {
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.has_seed = true;
  }
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("train")) cfg.train = j["train"];
  if (j.contains("audit")) cfg.audit = j["audit"];
  if (j.contains("attack")) cfg.attack = j["attack"];
  if (j.contains("data")) cfg.data = j["data"];
  if (j.contains("metric")) cfg.metric = j["metric"];

  reject_unknown(cfg.train,
                 {"mode", "arch", "hidden", "epochs", "batch_size", "epsilon", "lambda_step",
                  "theta_step", "lambda_init", "checkpoint_every"},
                 "train");
  reject_unknown(cfg.audit,
                 {"epsilon", "lambda_init", "lambda_step", "batch_size", "max_iters", "tol",
                  "window"},
                 "audit");
  reject_unknown(cfg.attack,
                 {"subspace_step", "subspace_epochs", "full_step", "full_epochs", "adam_beta1",
                  "adam_beta2", "adam_eps"},
                 "attack");
  reject_unknown(cfg.data,
                 {"path", "label", "protected", "adult", "adult_test", "split_seed", "split"},
                 "data");
  reject_unknown(cfg.metric, {"path"}, "metric");
  require_file(cfg.data, "path", "data");
  require_file(cfg.data, "adult", "data");
  require_file(cfg.data, "adult_test", "data");
  require_file(cfg.metric, "path", "metric");
  return cfg;
}

sensr::AttackConfig attack_from_json(const json& a) {
  sensr::AttackConfig cfg;
  if (a.contains("subspace_step")) cfg.subspace_step = a["subspace_step"].get<double>();
  if (a.contains("subspace_epochs")) cfg.subspace_epochs = a["subspace_epochs"].get<std::size_t>();
  if (a.contains("full_step")) cfg.full_step = a["full_step"].get<double>();
  if (a.contains("full_epochs")) cfg.full_epochs = a["full_epochs"].get<std::size_t>();
  if (a.contains("adam_beta1")) cfg.adam_beta1 = a["adam_beta1"].get<double>();
  if (a.contains("adam_beta2")) cfg.adam_beta2 = a["adam_beta2"].get<double>();
  if (a.contains("adam_eps")) cfg.adam_eps = a["adam_eps"].get<double>();
  return cfg;
}

// Data source flags shared by the subcommands that read a dataset.
struct DataArgs {
  std::string csv_path;
  std::string label_column = "label";
  std::vector<std::string> protected_columns;
  std::string adult_path;
  std::string adult_test_path;
  std::uint64_t split_seed = 0;
  std::string split = "train";
  std::string snapshot;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--data", csv_path, "generic CSV with a header row");
    cmd->add_option("--label", label_column, "label column name (generic CSV)");
    cmd->add_option("--protected", protected_columns,
                    "protected attribute column names (generic CSV)");
    cmd->add_option("--adult", adult_path, "UCI adult.data path");
    cmd->add_option("--adult-test", adult_test_path, "UCI adult.test path (pooled)");
    cmd->add_option("--split-seed", split_seed, "80/20 split seed for --adult");
    cmd->add_option("--split", split, "which adult split to use: train|test")
        ->check(CLI::IsMember({"train", "test"}));
    cmd->add_option("--snapshot", snapshot, "write the standardized dataset to this CSV");
  }

  void merge_config(const json& d) {
    if (csv_path.empty() && d.contains("path")) csv_path = d["path"].get<std::string>();
    if (d.contains("label")) label_column = d["label"].get<std::string>();
    if (protected_columns.empty() && d.contains("protected"))
      protected_columns = d["protected"].get<std::vector<std::string>>();
    if (adult_path.empty() && d.contains("adult")) adult_path = d["adult"].get<std::string>();
    if (adult_test_path.empty() && d.contains("adult_test"))
      adult_test_path = d["adult_test"].get<std::string>();
    if (d.contains("split_seed")) split_seed = d["split_seed"].get<std::uint64_t>();
    if (d.contains("split")) split = d["split"].get<std::string>();
  }

  sensr::TabularDataset load() const {
    if (!adult_path.empty()) {
      std::string warning;
      auto split_data = sensr::load_adult(
          adult_path,
          adult_test_path.empty() ? std::nullopt : std::make_optional(adult_test_path),
          split_seed, &warning);
      if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
      auto ds = (split == "test") ? std::move(split_data.test) : std::move(split_data.train);
      if (!snapshot.empty()) sensr::write_dataset_csv(snapshot, ds);
      return ds;
    }
    if (csv_path.empty())
      throw sensr::ConfigError("no data source: pass --data or --adult (or set them in --config)");
    auto ds = sensr::load_csv(csv_path, label_column, protected_columns);
    if (!snapshot.empty()) sensr::write_dataset_csv(snapshot, ds);
    return ds;
  }
};

std::string joined(const std::string& out_dir, const std::string& p) {
  if (p.empty() || out_dir.empty() || fs::path(p).is_absolute()) return p;
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / p).string();
}

int run(int argc, char** argv) {
  CLI::App app{"sensitive-subspace robust training and individual-fairness auditing"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::uint64_t seed = 0;
  int threads = 0;
  std::string config_path;
  std::string out_dir;
  app.add_option("--seed", seed, "global RNG seed")->group("Global");
  app.add_option("--threads", threads, "worker threads (0 = hardware)")->group("Global");
  app.add_option("--config", config_path, "run configuration JSON")->group("Global");
  app.add_option("--out-dir", out_dir, "directory for relative output paths")->group("Global");

  // ---- metric ----
  auto* cmd_metric = app.add_subcommand("metric", "learn a sensitive subspace + projector metric");
  DataArgs metric_data;
  metric_data.add_flags(cmd_metric);
  std::string metric_mode = "softmax";
  std::string metric_protected = "gender";
  double metric_l2 = 0.1;
  double metric_step = 0.1;
  std::size_t metric_epochs = 2000;
  std::size_t metric_batch = 0;
  std::vector<std::string> append_axes;
  bool zero_protected = true;
  std::string groups_file;
  std::size_t factor_k = 1;
  std::string metric_out = "metric.json";
  cmd_metric->add_option("--mode", metric_mode, "softmax|factor")
      ->check(CLI::IsMember({"softmax", "factor"}));
  cmd_metric->add_option("--protected-attr", metric_protected,
                         "protected attribute (softmax mode)");
  cmd_metric->add_option("--l2", metric_l2, "l2 regularization (softmax mode)");
  cmd_metric->add_option("--fit-step", metric_step, "fit step size");
  cmd_metric->add_option("--fit-epochs", metric_epochs, "fit epochs");
  cmd_metric->add_option("--fit-batch", metric_batch, "fit minibatch size (0 = full)");
  cmd_metric->add_option("--append-axes", append_axes,
                         "feature columns appended as axis directions (e.g. gender race)");
  cmd_metric->add_flag("--zero-protected-column,!--keep-protected-column", zero_protected,
                       "zero the protected feature column before the fit (default on)");
  cmd_metric->add_option("--groups", groups_file,
                         "comparable groups JSON (factor mode): list of row-index lists or "
                         "of vector lists");
  cmd_metric->add_option("-k,--k", factor_k, "number of factor directions (factor mode)");
  cmd_metric->add_option("--out", metric_out, "output metric JSON");

  // ---- train ----
  auto* cmd_train = app.add_subcommand("train", "train baseline | project | sensr");
  DataArgs train_data;
  train_data.add_flags(cmd_train);
  std::string train_mode;
  std::string train_arch;
  std::size_t train_hidden = 0;
  std::size_t train_epochs = 0;
  std::size_t train_batch = 0;
  double train_epsilon = -1.0;
  std::string train_metric_path;
  std::string train_out = "checkpoint.json";
  std::string train_log_path;
  cmd_train->add_option("--mode", train_mode, "sensr|baseline|project")
      ->check(CLI::IsMember({"sensr", "baseline", "project"}));
  cmd_train->add_option("--arch", train_arch, "logistic|mlp")
      ->check(CLI::IsMember({"logistic", "mlp"}));
  cmd_train->add_option("--hidden", train_hidden, "mlp hidden width");
  cmd_train->add_option("--epochs", train_epochs, "minibatch steps");
  cmd_train->add_option("--batch-size", train_batch, "minibatch size");
  cmd_train->add_option("--epsilon", train_epsilon, "perturbation budget");
  cmd_train->add_option("--metric", train_metric_path, "metric JSON (sensr/project)");
  cmd_train->add_option("--out", train_out, "checkpoint output path");
  cmd_train->add_option("--log", train_log_path, "training log CSV");

  // ---- audit ----
  auto* cmd_audit = app.add_subcommand("audit", "solve the dual audit problem for a model");
  DataArgs audit_data;
  audit_data.add_flags(cmd_audit);
  std::string audit_model_path;
  std::string audit_metric_path;
  std::string audit_out = "audit.json";
  std::string audit_perturbations;
  double audit_epsilon = -1.0;
  cmd_audit->add_option("--model", audit_model_path, "model checkpoint")->required();
  cmd_audit->add_option("--metric", audit_metric_path, "metric JSON");
  cmd_audit->add_option("--out", audit_out, "audit report JSON");
  cmd_audit->add_option("--perturbations", audit_perturbations,
                        "per-sample perturbation CSV");
  cmd_audit->add_option("--epsilon", audit_epsilon, "audit budget");

  // ---- eval ----
  auto* cmd_eval = app.add_subcommand("eval", "accuracy and fairness metrics for a model");
  DataArgs eval_data;
  eval_data.add_flags(cmd_eval);
  std::string eval_model_path;
  std::string eval_metric_path;
  std::string eval_out;
  bool eval_project = false;
  cmd_eval->add_option("--model", eval_model_path, "model checkpoint")->required();
  cmd_eval->add_option("--metric", eval_metric_path, "metric JSON (needed with --project)");
  cmd_eval->add_flag("--project", eval_project,
                     "project inputs with the metric before the forward pass");
  cmd_eval->add_option("--out", eval_out, "eval report JSON");

  // ---- demo-toy ----
  auto* cmd_demo = app.add_subcommand("demo-toy", "end-to-end 2-group toy demonstration");
  sensr::ToyDemoConfig demo_cfg;
  long long demo_epochs = -1;
  cmd_demo->add_option("--epochs", demo_epochs, "training steps (0 audits the init)");
  cmd_demo->add_option("--epsilon", demo_cfg.epsilon, "perturbation budget");
  cmd_demo->add_option("--grid", demo_cfg.grid, "heatmap resolution");
  cmd_demo->add_option("--n-major", demo_cfg.toy.n_major, "majority group size");
  cmd_demo->add_option("--n-minor", demo_cfg.toy.n_minor, "minority group size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;  // bad usage is a config error
  }

  RunConfig run_cfg;
  if (!config_path.empty()) run_cfg = load_run_config(config_path);
  if (app.count("--seed") == 0 && run_cfg.has_seed) seed = run_cfg.seed;
  if (app.count("--threads") == 0 && run_cfg.threads != 0) threads = run_cfg.threads;
  sensr::set_threads(threads);

  if (cmd_metric->parsed()) {
    metric_data.merge_config(run_cfg.data);
    sensr::SensitiveSubspace subspace;
    if (metric_mode == "softmax") {
      auto ds = metric_data.load();
      const auto it = ds.protected_attrs.find(metric_protected);
      if (it == ds.protected_attrs.end())
        throw sensr::ConfigError("metric: dataset has no protected attribute '" +
                                 metric_protected + "'");
      sensr::Matrix features = ds.features;
      const int prot_col = ds.meta.index_of(metric_protected);
      if (zero_protected && prot_col >= 0)
        for (std::size_t i = 0; i < features.rows(); ++i) features(i, prot_col) = 0.0;

      sensr::SoftmaxFitConfig fit;
      fit.step = metric_step;
      fit.epochs = metric_epochs;
      fit.batch_size = metric_batch;
      fit.seed = seed;

      sensr::Matrix axes(features.cols(), append_axes.size());
      for (std::size_t j = 0; j < append_axes.size(); ++j) {
        const int col = ds.meta.index_of(append_axes[j]);
        if (col < 0)
          throw sensr::ConfigError("metric: no feature column '" + append_axes[j] + "'");
        axes(static_cast<std::size_t>(col), j) = 1.0;
      }
      const sensr::Matrix* extra = append_axes.empty() ? nullptr : &axes;
      subspace = sensr::learn_subspace_softmax(features, it->second, metric_l2, fit, extra);
    } else {
      if (groups_file.empty()) throw sensr::ConfigError("metric: factor mode needs --groups");
      std::ifstream in(groups_file);
      if (!in) throw sensr::IoError("cannot open " + groups_file);
      json gj;
      in >> gj;
      if (!gj.is_array() || gj.empty())
        throw sensr::ConfigError("metric: groups file must be a non-empty JSON array");
      std::vector<sensr::ComparableGroup> groups;
      if (gj[0].is_array() && !gj[0].empty() && gj[0][0].is_array()) {
        // explicit vectors per group
        for (const auto& g : gj) {
          std::vector<sensr::Vector> rows;
          for (const auto& v : g) rows.push_back(v.get<sensr::Vector>());
          groups.push_back({sensr::Matrix::from_rows(rows)});
        }
      } else {
        auto ds = metric_data.load();
        for (const auto& g : gj) {
          std::vector<sensr::Vector> rows;
          for (const auto& v : g) {
            const auto idx = v.get<std::size_t>();
            if (idx >= ds.size()) throw sensr::ConfigError("metric: group row index out of range");
            rows.emplace_back(ds.features.row(idx).begin(), ds.features.row(idx).end());
          }
          groups.push_back({sensr::Matrix::from_rows(rows)});
        }
      }
      subspace = sensr::learn_subspace_factor(groups, factor_k);
    }
    const std::string out = joined(out_dir, metric_out);
    sensr::save_subspace(out, subspace);
    std::cout << "wrote " << out << " (rank " << subspace.rank() << ")\n";
    return 0;
  }

  if (cmd_train->parsed()) {
    train_data.merge_config(run_cfg.data);
    const json& tj = run_cfg.train;
    sensr::TrainConfig cfg;
    cfg.attack = attack_from_json(run_cfg.attack);
    if (tj.contains("mode")) cfg.mode = sensr::mode_from_name(tj["mode"].get<std::string>());
    if (!train_mode.empty()) cfg.mode = sensr::mode_from_name(train_mode);
    if (tj.contains("epochs")) cfg.epochs = tj["epochs"].get<std::size_t>();
    if (train_epochs > 0) cfg.epochs = train_epochs;
    if (tj.contains("batch_size")) cfg.batch_size = tj["batch_size"].get<std::size_t>();
    if (train_batch > 0) cfg.batch_size = train_batch;
    if (tj.contains("epsilon")) cfg.epsilon = tj["epsilon"].get<double>();
    if (train_epsilon >= 0.0) cfg.epsilon = train_epsilon;
    if (tj.contains("lambda_step")) cfg.lambda_step = tj["lambda_step"].get<double>();
    if (tj.contains("theta_step")) cfg.theta_step = tj["theta_step"].get<double>();
    if (tj.contains("lambda_init")) cfg.lambda_init = tj["lambda_init"].get<double>();
    if (tj.contains("checkpoint_every"))
      cfg.checkpoint_every = tj["checkpoint_every"].get<std::size_t>();
    cfg.seed = seed;

    sensr::ArchSpec arch;
    if (tj.contains("arch")) arch.arch = sensr::arch_from_name(tj["arch"].get<std::string>());
    if (!train_arch.empty()) arch.arch = sensr::arch_from_name(train_arch);
    if (tj.contains("hidden")) arch.hidden = tj["hidden"].get<std::size_t>();
    if (train_hidden > 0) arch.hidden = train_hidden;

    if (train_metric_path.empty() && run_cfg.metric.contains("path"))
      train_metric_path = run_cfg.metric["path"].get<std::string>();

    auto ds = train_data.load();
    const std::string out = joined(out_dir, train_out);

    sensr::TrainResult result;
    sensr::ModelParams checkpoint;
    try {
      if (cfg.mode == sensr::TrainMode::baseline) {
        result = sensr::train_baseline(ds, arch, cfg, &checkpoint);
      } else {
        if (train_metric_path.empty())
          throw sensr::ConfigError("train: mode '" + sensr::mode_name(cfg.mode) +
                                   "' needs --metric");
        const auto metric = sensr::load_fair_metric(train_metric_path);
        result = (cfg.mode == sensr::TrainMode::sensr)
                     ? sensr::train_sensr(ds, metric, arch, cfg, &checkpoint)
                     : sensr::train_project(ds, metric, arch, cfg, &checkpoint);
      }
    } catch (const sensr::NumericError& e) {
      if (checkpoint.input_dim > 0) {
        sensr::save_model(out, checkpoint);
        std::cerr << "error: " << e.what() << "; last good checkpoint written to " << out << "\n";
      } else {
        std::cerr << "error: " << e.what() << "\n";
      }
      return kExitNumeric;
    }
    sensr::save_model(out, result.params);
    if (!train_log_path.empty()) sensr::save_train_log(joined(out_dir, train_log_path), result.log);
    std::cout << "wrote " << out << "\n";
    return 0;
  }

  if (cmd_audit->parsed()) {
    audit_data.merge_config(run_cfg.data);
    const json& aj = run_cfg.audit;
    sensr::AuditConfig cfg;
    cfg.attack = attack_from_json(run_cfg.attack);
    if (aj.contains("epsilon")) cfg.epsilon = aj["epsilon"].get<double>();
    if (audit_epsilon >= 0.0) cfg.epsilon = audit_epsilon;
    if (aj.contains("lambda_init")) cfg.lambda_init = aj["lambda_init"].get<double>();
    if (aj.contains("lambda_step")) cfg.lambda_step = aj["lambda_step"].get<double>();
    if (aj.contains("batch_size")) cfg.batch_size = aj["batch_size"].get<std::size_t>();
    if (aj.contains("max_iters")) cfg.max_iters = aj["max_iters"].get<std::size_t>();
    if (aj.contains("tol")) cfg.tol = aj["tol"].get<double>();
    if (aj.contains("window")) cfg.window = aj["window"].get<std::size_t>();
    cfg.seed = seed;

    if (audit_metric_path.empty() && run_cfg.metric.contains("path"))
      audit_metric_path = run_cfg.metric["path"].get<std::string>();
    if (audit_metric_path.empty()) throw sensr::ConfigError("audit: needs --metric");

    const auto ds = audit_data.load();
    const auto metric = sensr::load_fair_metric(audit_metric_path);
    const auto params = sensr::load_model(audit_model_path);
    const auto report = sensr::audit(params, metric, ds, cfg);
    const std::string out = joined(out_dir, audit_out);
    sensr::save_audit_report(out, report);
    if (!audit_perturbations.empty())
      sensr::save_perturbations_csv(joined(out_dir, audit_perturbations), report, ds);
    std::cout << "lambda " << report.lambda_final << "  robust " << report.robust_loss
              << "  clean " << report.clean_loss << "  gap " << report.certificate_gap << "\n"
              << "wrote " << out << "\n";
    return 0;
  }

  if (cmd_eval->parsed()) {
    eval_data.merge_config(run_cfg.data);
    if (eval_metric_path.empty() && run_cfg.metric.contains("path"))
      eval_metric_path = run_cfg.metric["path"].get<std::string>();
    const auto ds = eval_data.load();
    const auto params = sensr::load_model(eval_model_path);
    std::optional<sensr::FairMetric> metric;
    if (eval_project) {
      if (eval_metric_path.empty())
        throw sensr::ConfigError("eval: --project needs --metric");
      metric = sensr::load_fair_metric(eval_metric_path);
    }
    const sensr::Matrix* transform = metric ? &metric->sigma.sigma : nullptr;
    const auto report = sensr::evaluate(params, ds, transform);
    std::cout << sensr::eval_report_table(report);
    if (!eval_out.empty()) sensr::save_eval_report(joined(out_dir, eval_out), report);
    return 0;
  }

  if (cmd_demo->parsed()) {
    if (app.count("--seed") > 0 || run_cfg.has_seed) demo_cfg.seed = seed;
    if (demo_epochs >= 0) demo_cfg.epochs = static_cast<std::size_t>(demo_epochs);
    if (!out_dir.empty()) demo_cfg.out_dir = out_dir;
    const auto res = sensr::run_toy_demo(demo_cfg);
    std::cout << "baseline gap " << res.baseline_gap << "  sensr gap " << res.sensr_gap << "\n"
              << "unfair-map shift: horizontal " << res.baseline_horizontal_shift
              << "  vertical " << res.baseline_vertical_shift << "\n"
              << "outputs in " << demo_cfg.out_dir << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sensr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sensr::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const sensr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
