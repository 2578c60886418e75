#include "sensr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sensr/errors.hpp"

namespace sensr {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, std::size_t expect_cols, const std::string& what) {
  if (!rows.is_array()) throw IoError(what + ": expected array of rows");
  std::vector<Vector> data;
  for (const auto& row : rows) {
    if (!row.is_array()) throw IoError(what + ": expected numeric row");
    Vector r;
    for (const auto& v : row) r.push_back(v.get<double>());
    data.push_back(std::move(r));
  }
  if (data.empty()) return Matrix(0, expect_cols);
  Matrix m = Matrix::from_rows(data);
  if (expect_cols != 0 && m.cols() != expect_cols) throw IoError(what + ": unexpected width");
  return m;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::string shortest_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void save_subspace(const std::string& path, const SensitiveSubspace& subspace) {
  json j;
  j["dim"] = subspace.dim();
  j["directions"] = matrix_to_json(subspace.directions);
  j["basis"] = matrix_to_json(subspace.basis);
  write_json_file(path, j);
}

SensitiveSubspace load_subspace(const std::string& path) {
  const json j = read_json_file(path);
  for (const auto& [key, _] : j.items())
    if (key != "dim" && key != "directions" && key != "basis")
      throw IoError(path + ": unknown key '" + key + "'");
  if (!j.contains("dim")) throw IoError(path + ": missing 'dim'");
  const auto d = j["dim"].get<std::size_t>();
  SensitiveSubspace s;
  s.directions = matrix_from_json(j.at("directions"), 0, path + " directions");
  s.basis = matrix_from_json(j.at("basis"), 0, path + " basis");
  if (s.directions.rows() != d || s.basis.rows() != d)
    throw IoError(path + ": matrices do not match dim");
  // Revalidate the invariants on the loaded basis.
  if (s.basis.cols() == 0) throw IoError(path + ": empty basis");
  const Matrix gram = multiply(transpose(s.basis), s.basis);
  Matrix dev = gram;
  for (std::size_t i = 0; i < dev.rows(); ++i) dev(i, i) -= 1.0;
  if (max_abs(dev) > 1e-10) throw IoError(path + ": basis not orthonormal");
  for (std::size_t j = 0; j < s.directions.cols(); ++j) {
    Vector col(d);
    for (std::size_t i = 0; i < d; ++i) col[i] = s.directions(i, j);
    Vector back = matvec(s.basis, matvec_transpose(s.basis, col));
    for (std::size_t i = 0; i < d; ++i) back[i] -= col[i];
    if (norm2(back) > 1e-8 * std::max(1.0, norm2(col)))
      throw IoError(path + ": direction outside span of basis");
  }
  return s;
}

FairMetric load_fair_metric(const std::string& path) {
  return FairMetric::from_subspace(load_subspace(path));
}

void save_model(const std::string& path, const ModelParams& p) {
  json j;
  j["arch"] = arch_name(p.arch);
  if (p.arch == Arch::logistic)
    j["dims"] = {p.input_dim, p.num_classes};
  else
    j["dims"] = {p.input_dim, p.hidden, p.num_classes};
  json w;
  w["w1"] = matrix_to_json(p.w1);
  w["b1"] = p.b1;
  if (p.arch == Arch::mlp) {
    w["w2"] = matrix_to_json(p.w2);
    w["b2"] = p.b2;
  }
  j["weights"] = std::move(w);
  write_json_file(path, j);
}

ModelParams load_model(const std::string& path) {
  const json j = read_json_file(path);
  ModelParams p;
  p.arch = arch_from_name(j.at("arch").get<std::string>());
  const auto dims = j.at("dims").get<std::vector<std::size_t>>();
  const json& w = j.at("weights");
  if (p.arch == Arch::logistic) {
    if (dims.size() != 2) throw IoError(path + ": logistic expects dims [d, C]");
    p.input_dim = dims[0];
    p.num_classes = dims[1];
    p.w1 = matrix_from_json(w.at("w1"), p.input_dim, path + " w1");
    p.b1 = w.at("b1").get<Vector>();
    if (p.w1.rows() != p.num_classes || p.b1.size() != p.num_classes)
      throw IoError(path + ": weight shapes disagree with dims");
  } else {
    if (dims.size() != 3) throw IoError(path + ": mlp expects dims [d, h, C]");
    p.input_dim = dims[0];
    p.hidden = dims[1];
    p.num_classes = dims[2];
    p.w1 = matrix_from_json(w.at("w1"), p.input_dim, path + " w1");
    p.b1 = w.at("b1").get<Vector>();
    p.w2 = matrix_from_json(w.at("w2"), p.hidden, path + " w2");
    p.b2 = w.at("b2").get<Vector>();
    if (p.w1.rows() != p.hidden || p.b1.size() != p.hidden ||
        p.w2.rows() != p.num_classes || p.b2.size() != p.num_classes)
      throw IoError(path + ": weight shapes disagree with dims");
  }
  require_finite(p.w1.data(), "model weights");
  require_finite(p.b1, "model weights");
  require_finite(p.w2.data(), "model weights");
  require_finite(p.b2, "model weights");
  return p;
}

void save_audit_report(const std::string& path, const AuditReport& r) {
  json j;
  j["lambda_final"] = r.lambda_final;
  j["robust_loss"] = r.robust_loss;
  j["clean_loss"] = r.clean_loss;
  j["certificate_gap"] = r.certificate_gap;
  j["mean_perturbation_cost"] = r.mean_perturbation_cost;
  j["epsilon"] = r.epsilon;
  j["n"] = r.per_sample.size();
  json per = json::array();
  for (const auto& s : r.per_sample)
    per.push_back({{"index", s.index}, {"loss_gain", s.loss_gain}, {"cost", s.dist_sq}});
  j["per_sample"] = std::move(per);
  write_json_file(path, j);
}

void save_perturbations_csv(const std::string& path, const AuditReport& r,
                            const TabularDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "index";
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",x" << j;
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",x_star" << j;
  out << ",loss_gain\n";
  for (const auto& s : r.per_sample) {
    out << s.index;
    for (std::size_t j = 0; j < data.dim(); ++j)
      out << "," << shortest_double(data.features(s.index, j));
    for (double v : s.x_star) out << "," << shortest_double(v);
    out << "," << shortest_double(s.loss_gain) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_eval_report(const std::string& path, const EvalReport& r) {
  json j;
  j["accuracy"] = r.accuracy;
  j["balanced_accuracy"] = r.balanced_accuracy;
  j["gap_rms"] = r.gap_rms;
  j["gap_max"] = r.gap_max;
  j["group_logit_gaps"] = r.group_logit_gaps;
  if (r.s_con >= 0.0) j["s_con"] = r.s_con;
  if (r.gr_con >= 0.0) j["gr_con"] = r.gr_con;
  write_json_file(path, j);
}

std::string eval_report_table(const EvalReport& r) {
  std::ostringstream os;
  os << "metric                 value\n";
  os << "---------------------  -----\n";
  auto line = [&os](const std::string& name, double v) {
    os << name;
    for (std::size_t i = name.size(); i < 23; ++i) os << ' ';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    os << buf << "\n";
  };
  line("B-Acc", r.balanced_accuracy);
  line("Accuracy", r.accuracy);
  if (r.s_con >= 0.0) line("S-Con.", r.s_con);
  if (r.gr_con >= 0.0) line("GR-Con.", r.gr_con);
  for (const auto& [name, v] : r.gap_rms) line("Gap RMS (" + name + ")", v);
  for (const auto& [name, v] : r.gap_max) line("Gap max (" + name + ")", v);
  for (const auto& [name, v] : r.group_logit_gaps) line("Logit gap (" + name + ")", v);
  return os.str();
}

void save_train_log(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,lambda,clean_loss,robust_loss,mean_cost\n";
  for (const auto& e : log)
    out << e.epoch << "," << shortest_double(e.lambda) << "," << shortest_double(e.clean_loss)
        << "," << shortest_double(e.robust_loss) << "," << shortest_double(e.mean_cost) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace sensr
