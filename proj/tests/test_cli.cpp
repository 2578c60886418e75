// CLI contract checks: exit codes, config rejection, end-to-end subcommands.
// argv[1] = path to the sensr binary.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;
int failures = 0;

int run_cmd(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void expect_exit(const std::string& what, const std::string& cmd, int want) {
  const int got = run_cmd(cmd);
  if (got == want) {
    std::printf("ok   %s\n", what.c_str());
  } else {
    std::printf("FAIL %s: exit %d, wanted %d\n", what.c_str(), got, want);
    ++failures;
  }
}

void expect(const std::string& what, bool cond) {
  if (cond) {
    std::printf("ok   %s\n", what.c_str());
  } else {
    std::printf("FAIL %s\n", what.c_str());
    ++failures;
  }
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::string toy_csv() {
  std::string s = "h,v,label,group\n";
  for (int i = 0; i < 24; ++i) {
    const int y = i % 2;
    const int g = i < 20 ? 0 : 1;
    const double v = (y == 1 ? 1.0 : -1.0) + 0.01 * i;
    const double h = g == 0 ? 0.8 * (y == 1 ? 1.0 : -1.0) + 0.02 * i : 4.0;
    s += std::to_string(h) + "," + std::to_string(v) + "," + std::to_string(y) + "," +
         std::to_string(g) + "\n";
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: sensr_cli_tests <path-to-sensr>\n");
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path dir = fs::temp_directory_path() / "sensr_cli_tests";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto at = [&dir](const std::string& name) { return (dir / name).string(); };

  expect_exit("no subcommand is a usage error", bin, 2);
  expect_exit("unknown flag is a usage error", bin + " train --bogus", 2);
  expect_exit("help exits zero", bin + " --help", 0);

  write_file(dir / "unknown_key.json", R"({"train": {"second_order": true}})");
  expect_exit("config with unknown key is rejected",
              bin + " demo-toy --config " + at("unknown_key.json") + " --out-dir " + at("d0"), 2);

  write_file(dir / "missing_file.json", R"({"data": {"path": "/nonexistent/x.csv"}})");
  expect_exit("config referencing a missing file is rejected",
              bin + " demo-toy --config " + at("missing_file.json") + " --out-dir " + at("d1"), 2);

  write_file(dir / "toy.csv", toy_csv());
  expect_exit("audit with a missing model file is an I/O error",
              bin + " audit --model " + at("nope.json") + " --metric " + at("nope2.json") +
                  " --data " + at("toy.csv") + " --protected group",
              4);

  // metric (factor mode, explicit vectors)
  write_file(dir / "groups.json", R"([[[0.0, 1.0], [0.0, -1.0], [0.0, 0.4]],
                                      [[2.0, 0.3], [2.0, -0.2]]])");
  expect_exit("metric factor mode writes a subspace",
              bin + " metric --mode factor --groups " + at("groups.json") + " -k 1 --out " +
                  at("metric.json"),
              0);
  expect("metric file exists", fs::exists(at("metric.json")));

  // metric (softmax mode on the toy csv)
  expect_exit("metric softmax mode",
              bin + " metric --mode softmax --data " + at("toy.csv") +
                  " --protected group --protected-attr group --fit-epochs 200 --out " +
                  at("metric_softmax.json"),
              0);

  // train baseline on the csv, then evaluate
  expect_exit("train baseline",
              bin + " train --mode baseline --arch logistic --data " + at("toy.csv") +
                  " --protected group --epochs 40 --batch-size 8 --out " + at("ck.json") +
                  " --log " + at("log.csv"),
              0);
  expect("checkpoint written", fs::exists(at("ck.json")));
  expect("train log written", fs::exists(at("log.csv")));
  expect_exit("eval runs",
              bin + " eval --model " + at("ck.json") + " --data " + at("toy.csv") +
                  " --protected group --out " + at("eval.json"),
              0);

  // train sensr with the learned metric, then audit
  expect_exit("train sensr",
              bin + " train --mode sensr --arch logistic --data " + at("toy.csv") +
                  " --protected group --metric " + at("metric.json") +
                  " --epochs 40 --batch-size 8 --epsilon 0.001 --out " + at("ck_sensr.json"),
              0);
  expect_exit("audit a checkpoint",
              bin + " audit --model " + at("ck_sensr.json") + " --metric " + at("metric.json") +
                  " --data " + at("toy.csv") + " --protected group --epsilon 0.001 --out " +
                  at("audit.json") + " --perturbations " + at("pert.csv"),
              0);
  expect("audit report written", fs::exists(at("audit.json")));
  expect("perturbation csv written", fs::exists(at("pert.csv")));

  // project training needs the metric; eval with --project
  expect_exit("train project",
              bin + " train --mode project --arch logistic --data " + at("toy.csv") +
                  " --protected group --metric " + at("metric.json") +
                  " --epochs 40 --batch-size 8 --out " + at("ck_proj.json"),
              0);
  expect_exit("eval --project",
              bin + " eval --model " + at("ck_proj.json") + " --data " + at("toy.csv") +
                  " --protected group --metric " + at("metric.json") + " --project",
              0);

  // numeric divergence exit code via an exploding attack step
  write_file(dir / "diverge.json",
             R"({"train": {"mode": "sensr", "arch": "logistic", "epochs": 3, "batch_size": 8,
                           "epsilon": 0.001},
                 "attack": {"subspace_epochs": 0, "full_step": 1e200, "full_epochs": 2}})");
  expect_exit("diverging training exits 3",
              bin + " train --config " + at("diverge.json") + " --data " + at("toy.csv") +
                  " --protected group --metric " + at("metric.json") + " --out " +
                  at("ck_div.json"),
              3);

  // demo-toy smoke test (tiny), plus the degenerate zero-epoch run where the
  // audit targets the raw initialization
  expect_exit("demo-toy smoke",
              bin + " demo-toy --epochs 30 --n-major 60 --n-minor 20 --grid 40 --out-dir " +
                  at("demo"),
              0);
  expect_exit("demo-toy with zero epochs audits the initialization",
              bin + " demo-toy --epochs 0 --n-major 60 --n-minor 20 --grid 32 --out-dir " +
                  at("demo0"),
              0);
  expect("zero-epoch demo wrote a report", fs::exists(dir / "demo0" / "demo_report.json"));
  for (const char* f :
       {"toy_train.csv", "toy_test.csv", "metric.json", "baseline_model.json",
        "sensr_model.json", "baseline_audit.json", "sensr_audit.json", "heatmap_baseline.ppm",
        "heatmap_unfair_map.ppm", "heatmap_sensr.ppm", "demo_report.json"})
    expect(std::string("demo wrote ") + f, fs::exists(dir / "demo" / f));

  if (failures == 0) fs::remove_all(dir);
  std::printf("%s (%d failures)\n", failures == 0 ? "PASSED" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
