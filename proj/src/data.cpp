#include "sensr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sensr/errors.hpp"
#include "sensr/rng.hpp"

namespace sensr {

int FeatureMeta::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::size_t> FeatureMeta::group_columns(int group) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].kind == ColKind::onehot && columns[i].group == group) out.push_back(i);
  return out;
}

int FeatureMeta::category_index(const std::string& group_name, const std::string& category) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].kind == ColKind::onehot && columns[i].name == group_name &&
        columns[i].category == category)
      return static_cast<int>(i);
  return -1;
}

void TabularDataset::validate() const {
  if (size() == 0) throw ConfigError("dataset: empty");
  if (labels.size() != size()) throw ConfigError("dataset: label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw ConfigError("dataset: label out of range");
  for (const auto& [name, vals] : protected_attrs)
    if (vals.size() != size()) throw ConfigError("dataset: protected column '" + name + "' length mismatch");
  if (meta.dim() != 0 && meta.dim() != dim()) throw ConfigError("dataset: meta dimension mismatch");
  require_finite(features.data(), "dataset features");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

double parse_number(const std::string& cell, const std::string& file, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw IoError(file + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
  }
}

// Canonical UCI Adult category lists; encoding does not depend on which
// categories happen to appear in the given files.
const std::vector<std::string> kWorkclass = {
    "Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
    "Local-gov", "State-gov", "Without-pay", "Never-worked"};
const std::vector<std::string> kMarital = {
    "Married-civ-spouse", "Divorced", "Never-married", "Separated",
    "Widowed", "Married-spouse-absent", "Married-AF-spouse"};
const std::vector<std::string> kOccupation = {
    "Tech-support", "Craft-repair", "Other-service", "Sales", "Exec-managerial",
    "Prof-specialty", "Handlers-cleaners", "Machine-op-inspct", "Adm-clerical",
    "Farming-fishing", "Transport-moving", "Priv-house-serv", "Protective-serv",
    "Armed-Forces"};
const std::vector<std::string> kRelationship = {
    "Wife", "Own-child", "Husband", "Not-in-family", "Other-relative", "Unmarried"};

struct AdultRow {
  double age = 0, education_num = 0, capital_gain = 0, capital_loss = 0, hours = 0;
  int sex = 0, race = 0;
  int workclass = -1, marital = -1, occupation = -1, relationship = -1;
  int label = 0;
};

int category_id(const std::vector<std::string>& cats, const std::string& value,
                const std::string& file, std::size_t line_no) {
  for (std::size_t i = 0; i < cats.size(); ++i)
    if (cats[i] == value) return static_cast<int>(i);
  throw IoError(file + ":" + std::to_string(line_no) + ": unknown category '" + value + "'");
}

void read_adult_file(const std::string& path, std::vector<AdultRow>& rows) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '|') continue;  // adult.test banner line
    auto cells = split_csv_line(t);
    if (cells.size() != 15)
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 15 fields, got " +
                    std::to_string(cells.size()));
    if (std::any_of(cells.begin(), cells.end(), [](const std::string& c) { return c == "?"; }))
      continue;  // drop rows with missing data
    AdultRow r;
    r.age = parse_number(cells[0], path, line_no);
    r.workclass = category_id(kWorkclass, cells[1], path, line_no);
    // cells[2] fnlwgt dropped, cells[3] education dropped
    r.education_num = parse_number(cells[4], path, line_no);
    r.marital = category_id(kMarital, cells[5], path, line_no);
    r.occupation = category_id(kOccupation, cells[6], path, line_no);
    r.relationship = category_id(kRelationship, cells[7], path, line_no);
    r.race = (cells[8] == "White") ? 1 : 0;
    if (cells[9] == "Male")
      r.sex = 1;
    else if (cells[9] == "Female")
      r.sex = 0;
    else
      throw IoError(path + ":" + std::to_string(line_no) + ": unknown sex '" + cells[9] + "'");
    r.capital_gain = parse_number(cells[10], path, line_no);
    r.capital_loss = parse_number(cells[11], path, line_no);
    r.hours = parse_number(cells[12], path, line_no);
    // cells[13] native-country dropped
    std::string income = cells[14];
    if (!income.empty() && income.back() == '.') income.pop_back();
    if (income == ">50K")
      r.label = 1;
    else if (income == "<=50K")
      r.label = 0;
    else
      throw IoError(path + ":" + std::to_string(line_no) + ": unknown income '" + income + "'");
    rows.push_back(r);
  }
}

FeatureMeta adult_meta() {
  FeatureMeta meta;
  auto cont = [&meta](const std::string& n) {
    meta.columns.push_back({n, ColKind::continuous, -1, "", 0.0, 1.0});
  };
  cont("age");
  cont("education-num");
  cont("capital-gain");
  cont("capital-loss");
  cont("hours-per-week");
  meta.columns.push_back({"gender", ColKind::binary, -1, "", 0.0, 1.0});
  meta.columns.push_back({"race", ColKind::binary, -1, "", 0.0, 1.0});
  auto group = [&meta](const std::string& n, const std::vector<std::string>& cats, int gid) {
    for (const auto& c : cats) meta.columns.push_back({n, ColKind::onehot, gid, c, 0.0, 1.0});
  };
  group("workclass", kWorkclass, 0);
  group("marital-status", kMarital, 1);
  group("occupation", kOccupation, 2);
  group("relationship", kRelationship, 3);
  return meta;
}

Vector encode_adult_row(const AdultRow& r, const FeatureMeta& meta) {
  Vector x(meta.dim(), 0.0);
  x[0] = r.age;
  x[1] = r.education_num;
  x[2] = r.capital_gain;
  x[3] = r.capital_loss;
  x[4] = r.hours;
  x[5] = r.sex;
  x[6] = r.race;
  std::size_t at = 7;
  x[at + r.workclass] = 1.0;
  at += kWorkclass.size();
  x[at + r.marital] = 1.0;
  at += kMarital.size();
  x[at + r.occupation] = 1.0;
  at += kOccupation.size();
  x[at + r.relationship] = 1.0;
  return x;
}

// Fits the scaler on `fit` rows and standardizes both matrices in place.
void standardize(Matrix& fit, Matrix& other, FeatureMeta& meta) {
  const std::size_t n = fit.rows(), d = fit.cols();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += fit(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = fit(i, j) - mean;
      var += c * c;
    }
    double stdev = std::sqrt(var / static_cast<double>(n));
    if (stdev < 1e-12) stdev = 1.0;  // constant column stays constant
    meta.columns[j].mean = mean;
    meta.columns[j].stdev = stdev;
    for (std::size_t i = 0; i < n; ++i) fit(i, j) = (fit(i, j) - mean) / stdev;
    for (std::size_t i = 0; i < other.rows(); ++i) other(i, j) = (other(i, j) - mean) / stdev;
  }
}

TabularDataset assemble(const std::vector<AdultRow>& rows, const std::vector<std::size_t>& idx,
                        const FeatureMeta& meta) {
  TabularDataset ds;
  ds.meta = meta;
  ds.num_classes = 2;
  ds.features = Matrix(idx.size(), meta.dim());
  ds.labels.resize(idx.size());
  auto& gender = ds.protected_attrs["gender"];
  auto& race = ds.protected_attrs["race"];
  gender.resize(idx.size());
  race.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const AdultRow& r = rows[idx[i]];
    const Vector x = encode_adult_row(r, meta);
    std::copy(x.begin(), x.end(), ds.features.row(i).begin());
    ds.labels[i] = r.label;
    gender[i] = r.sex;
    race[i] = r.race;
  }
  return ds;
}

}  // namespace

DatasetSplit load_adult(const std::string& train_path,
                        const std::optional<std::string>& test_path,
                        std::uint64_t split_seed, std::string* warning) {
  std::vector<AdultRow> rows;
  read_adult_file(train_path, rows);
  if (test_path) read_adult_file(*test_path, rows);
  if (rows.empty()) throw IoError("adult: no usable rows");
  if (rows.size() != 45222 && warning != nullptr)
    *warning = "adult: expected 45222 rows after filtering, got " + std::to_string(rows.size());

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = (rows.size() * 8) / 10;
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());

  FeatureMeta meta = adult_meta();
  DatasetSplit split;
  split.train = assemble(rows, train_idx, meta);
  split.test = assemble(rows, test_idx, meta);
  standardize(split.train.features, split.test.features, meta);
  split.train.meta = meta;
  split.test.meta = meta;
  split.train.validate();
  split.test.validate();
  return split;
}

TabularDataset make_toy(const ToyConfig& cfg) {
  auto class_counts = [](std::size_t n, double pos_frac) {
    const auto pos = static_cast<std::size_t>(std::lround(pos_frac * static_cast<double>(n)));
    return std::pair<std::size_t, std::size_t>{n - pos, pos};  // (neg, pos)
  };
  const auto [maj_neg, maj_pos] = class_counts(cfg.n_major, 0.5);
  const auto [min_neg, min_pos] = class_counts(cfg.n_minor, cfg.minority_pos_frac);
  if (maj_neg < 2 || maj_pos < 2 || min_neg < 2 || min_pos < 2)
    throw ConfigError("make_toy: needs at least 2 samples per class per group");
  if (cfg.noise < 0.0) throw ConfigError("make_toy: negative noise");

  const std::size_t n = cfg.n_major + cfg.n_minor;
  TabularDataset ds;
  ds.num_classes = 2;
  ds.features = Matrix(n, 2);
  ds.labels.resize(n);
  auto& group = ds.protected_attrs["group"];
  group.resize(n);
  ds.meta.columns = {{"horizontal", ColKind::continuous, -1, "", 0.0, 1.0},
                     {"vertical", ColKind::continuous, -1, "", 0.0, 1.0}};

  Rng rng = make_rng(cfg.seed);
  std::size_t at = 0;
  auto emit = [&](int g, int y, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i, ++at) {
      const double signal = (y == 1 ? 1.0 : -1.0);
      const double v = signal + (cfg.noise > 0.0 ? normal(rng, 0.0, cfg.noise) : 0.0);
      const double scatter = normal(rng, 0.0, cfg.group_spread);
      const double h =
          (g == 0) ? cfg.majority_align * signal + scatter : cfg.separation + scatter;
      ds.features(at, 0) = h;
      ds.features(at, 1) = v;
      ds.labels[at] = y;
      group[at] = g;
    }
  };
  emit(0, 0, maj_neg);
  emit(0, 1, maj_pos);
  emit(1, 0, min_neg);
  emit(1, 1, min_pos);
  ds.validate();
  return ds;
}

std::array<Vector, 2> counterfactual_spouse(std::span<const double> x, const FeatureMeta& meta) {
  const int husband = meta.category_index("relationship", "Husband");
  const int wife = meta.category_index("relationship", "Wife");
  if (husband < 0 || wife < 0)
    throw ConfigError("counterfactual_spouse: no relationship one-hot group in meta");
  const int gid = meta.columns[husband].group;
  const auto cols = meta.group_columns(gid);
  std::array<Vector, 2> out{Vector(x.begin(), x.end()), Vector(x.begin(), x.end())};
  for (std::size_t side = 0; side < 2; ++side) {
    const int active = (side == 0 ? husband : wife);
    for (std::size_t c : cols)
      out[side][c] = meta.scaled(c, c == static_cast<std::size_t>(active) ? 1.0 : 0.0);
  }
  return out;
}

std::array<Vector, 4> counterfactual_gender_race(std::span<const double> x,
                                                 const FeatureMeta& meta) {
  const int g = meta.index_of("gender");
  const int r = meta.index_of("race");
  if (g < 0 || r < 0)
    throw ConfigError("counterfactual_gender_race: gender/race columns missing from meta");
  std::array<Vector, 4> out;
  std::size_t i = 0;
  for (int gv = 0; gv <= 1; ++gv) {
    for (int rv = 0; rv <= 1; ++rv, ++i) {
      out[i].assign(x.begin(), x.end());
      out[i][g] = meta.scaled(static_cast<std::size_t>(g), gv);
      out[i][r] = meta.scaled(static_cast<std::size_t>(r), rv);
    }
  }
  return out;
}

TabularDataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& protected_columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split_csv_line(line);

  int label_at = -1;
  std::vector<int> prot_at(protected_columns.size(), -1);
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == label_column) {
      label_at = static_cast<int>(j);
      continue;
    }
    bool is_prot = false;
    for (std::size_t p = 0; p < protected_columns.size(); ++p) {
      if (header[j] == protected_columns[p]) {
        prot_at[p] = static_cast<int>(j);
        is_prot = true;
      }
    }
    if (!is_prot) feature_cols.push_back(j);
  }
  if (label_at < 0) throw ConfigError(path + ": no label column '" + label_column + "'");
  for (std::size_t p = 0; p < protected_columns.size(); ++p)
    if (prot_at[p] < 0)
      throw ConfigError(path + ": no protected column '" + protected_columns[p] + "'");

  std::vector<Vector> feats;
  std::vector<int> labels;
  std::vector<std::vector<int>> prot(protected_columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(header.size()) + " fields");
    Vector x(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j)
      x[j] = parse_number(cells[feature_cols[j]], path, line_no);
    feats.push_back(std::move(x));
    labels.push_back(static_cast<int>(parse_number(cells[label_at], path, line_no)));
    for (std::size_t p = 0; p < protected_columns.size(); ++p)
      prot[p].push_back(static_cast<int>(parse_number(cells[prot_at[p]], path, line_no)));
  }
  if (feats.empty()) throw IoError(path + ": no data rows");

  TabularDataset ds;
  ds.features = Matrix::from_rows(feats);
  ds.labels = std::move(labels);
  ds.num_classes = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
  if (ds.num_classes < 2) ds.num_classes = 2;
  for (std::size_t p = 0; p < protected_columns.size(); ++p)
    ds.protected_attrs[protected_columns[p]] = std::move(prot[p]);
  for (std::size_t j = 0; j < feature_cols.size(); ++j)
    ds.meta.columns.push_back({header[feature_cols[j]], ColKind::continuous, -1, "", 0.0, 1.0});
  ds.validate();
  return ds;
}

namespace {
std::string shortest_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}
}  // namespace

void write_dataset_csv(const std::string& path, const TabularDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t j = 0; j < ds.meta.dim(); ++j) {
    const auto& c = ds.meta.columns[j];
    out << (c.kind == ColKind::onehot ? c.name + "=" + c.category : c.name) << ",";
  }
  out << "label";
  for (const auto& [name, vals] : ds.protected_attrs) out << "," << name;
  out << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) out << shortest_double(ds.features(i, j)) << ",";
    out << ds.labels[i];
    for (const auto& [name, vals] : ds.protected_attrs) out << "," << vals[i];
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace sensr
