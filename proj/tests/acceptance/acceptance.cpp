// Acceptance checks: one PASS/FAIL/SKIP line per criterion, exit status 1 on any FAIL.
//
//   acceptance            run every criterion
//   acceptance 3 7        run only the listed criteria
//
// Criteria 2 (published ratios) and 8 read the published supporting CSVs from the
// directory named by QSPR_PUBLISHED_DATA: measurements.csv plus percepta.csv (or
// percepta_raw.csv for the unprocessed export), cddd.csv, ecfp.csv and optionally
// molbert.csv, rdkit.csv and folds.csv.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qspr/assay.hpp"
#include "qspr/chem/smiles.hpp"
#include "qspr/chem/standardize.hpp"
#include "qspr/data/synth.hpp"
#include "qspr/design/design.hpp"
#include "qspr/error.hpp"
#include "qspr/models/linear.hpp"
#include "qspr/models/mlp.hpp"
#include "qspr/models/svr.hpp"
#include "qspr/models/tree.hpp"
#include "qspr/pca.hpp"
#include "qspr/random.hpp"
#include "qspr/tuning/metrics.hpp"
#include "qspr/tuning/tuning.hpp"
#include "qspr/workflow.hpp"
#include "support/corpus.hpp"

namespace fs = std::filesystem;
using namespace qspr;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Json = nlohmann::ordered_json;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

// Collects failed sub-checks so one line can say what went wrong.
struct Checks {
  std::vector<std::string> failed;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }

  Outcome outcome() const {
    std::string d;
    const auto& items = failed.empty() ? notes : failed;
    for (std::size_t i = 0; i < items.size(); ++i) d += (i ? "; " : "") + items[i];
    return {failed.empty() ? Status::Pass : Status::Fail, d};
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

MatrixXd normal_matrix(Rng& rng, Eigen::Index n, Eigen::Index d) {
  MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

std::optional<fs::path> published_data_dir() {
  const char* dir = std::getenv("QSPR_PUBLISHED_DATA");
  if (!dir || !*dir || !fs::exists(fs::path(dir) / "measurements.csv")) return std::nullopt;
  return fs::path(dir);
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qspr_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1: assay ----

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(b), 1e-300); }

Outcome assay_math() {
  using namespace qspr::assay;
  Checks c;
  const AssayGeometry g;
  Rng rng(1001);
  int linear_bad = 0, scale_bad = 0, log_bad = 0, penetrant = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const double cd0 = 1e-8 + rng.uniform() * 1e-6;
    const double cd_a = rng.uniform() * cd0, cd_b = rng.uniform() * cd0;
    const double ca_a = rng.uniform() * 0.2 * cd0, ca_b = rng.uniform() * 0.2 * cd0;
    const double lhs = membrane_retention({cd0, cd_a + cd_b, ca_a + ca_b}, g) - 1.0;
    const double rhs = (membrane_retention({cd0, cd_a, ca_a}, g) - 1.0) + (membrane_retention({cd0, cd_b, ca_b}, g) - 1.0);
    linear_bad += !rel_close(lhs, rhs, 1e-12);

    const double s = 0.01 + rng.uniform() * 100.0;
    const WellConcentrations w{cd0, cd_a, ca_a};
    const WellConcentrations ws{cd0 * s, cd_a * s, ca_a * s};
    const double mr = membrane_retention(w, g);
    // MR = 1 - a - b cancels near zero, so its error is measured against the unit-size terms.
    scale_bad += !(std::abs(membrane_retention(ws, g) - mr) <= 1e-12 * std::max(1.0, std::abs(mr)));
    const auto r = evaluate_well(w, g);
    if (!r.effective_permeability) continue;
    ++penetrant;
    scale_bad += !rel_close(*evaluate_well(ws, g).effective_permeability, *r.effective_permeability, 1e-12);
    log_bad += !(std::abs(*r.log_pe - std::log10(*r.effective_permeability)) <= 1e-12);
  }
  c.expect(linear_bad == 0, std::to_string(linear_bad) + " linearity violations");
  c.expect(scale_bad == 0, std::to_string(scale_bad) + " scaling violations");
  c.expect(log_bad == 0, std::to_string(log_bad) + " log round-trip violations");
  c.expect(penetrant > 1000, "too few penetrant samples (" + std::to_string(penetrant) + ")");

  // Reference values from 50-digit arithmetic.
  const double mr = membrane_retention({1e-7, 6e-8, 1e-8}, g);
  const double pe = effective_permeability({1.0, 0.6, 0.0}, g, 0.0);
  c.expect(rel_close(mr, 0.2, 1e-9), "MR example " + fmt(mr, 17));
  c.expect(rel_close(pe, 1.414283703660034899452961e-4, 1e-9), "Pe example " + fmt(pe, 17));
  c.expect(rel_close(std::log10(pe), -3.849463462833859339187667, 1e-9), "logPe example " + fmt(std::log10(pe), 17));
  c.note("10000 random wells, " + std::to_string(penetrant) + " penetrant; derived MR/Pe/logPe within 1e-9");
  return c.outcome();
}

// ---- 2: PCA ----

Outcome pca_oracle() {
  Checks c;
  Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MatrixXd x = normal_matrix(rng, 10, 4);
    for (Eigen::Index j = 0; j < 4; ++j) x.col(j) *= 1.0 + static_cast<double>(j);
    const auto m = pca::pca_fit(x, 4);
    const MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(centered.transpose() * centered / 9.0);
    const VectorXd ev = es.eigenvalues().reverse();
    for (int i = 0; i < 4; ++i) {
      worst = std::max(worst, std::abs(m.explained_variance_ratio(i) - ev(i) / ev.sum()));
      const VectorXd v = es.eigenvectors().col(3 - i);
      worst = std::max(worst, std::abs(std::abs(v.dot(m.components.row(i).transpose())) - 1.0));
    }
  }
  c.expect(worst < 1e-8, "oracle deviation " + fmt(worst));
  c.note("100 random 10x4 matrices, max deviation " + fmt(worst, 3));

  if (const auto dir = published_data_dir()) {
    workflow::RunConfig cfg;
    cfg.doc["data"]["measurements"] = (*dir / "measurements.csv").string();
    cfg.out_dir = scratch_dir("pca");
    workflow::cmd_pca(cfg);
    const auto model = nlohmann::json::parse(slurp(cfg.out_dir / "pca_model.json"));
    const auto ratios = model["explained_variance_ratio"].get<std::vector<double>>();
    const double expect[3] = {0.6588, 0.1067, 0.0798};
    for (std::size_t i = 0; i < 3; ++i)
      c.expect(ratios.size() > i && std::abs(ratios[i] - expect[i]) <= 0.005,
               "ratio " + std::to_string(i) + " = " + (ratios.size() > i ? fmt(ratios[i]) : std::string("missing")));
    c.note("published ratios " + fmt(ratios[0]) + "/" + fmt(ratios[1]) + "/" + fmt(ratios[2]));
  } else {
    c.note("published-ratio check skipped (QSPR_PUBLISHED_DATA not set)");
  }
  return c.outcome();
}

// ---- 3: model oracles ----

std::pair<VectorXd, double> ols(const MatrixXd& x, const VectorXd& y) {
  MatrixXd design(x.rows(), x.cols() + 1);
  design << x, VectorXd::Ones(x.rows());
  const VectorXd beta = design.colPivHouseholderQr().solve(y);
  return {beta.head(x.cols()), beta(x.cols())};
}

double soft(double z, double t) { return z > t ? z - t : (z < -t ? z + t : 0.0); }

Outcome model_oracles() {
  using namespace qspr::models;
  Checks c;
  const auto ds = data::synth_dataset(1003, 60, 8, 2, 0.3);
  const MatrixXd& x = ds.table.values;
  const VectorXd y = ds.targets.col(0);
  const auto [w, b] = ols(x, y);
  const VectorXd ols_pred = (x * w).array() + b;

  const auto en = fit_elastic_net(x, y, 0.0, 0.5);
  const double en_err = std::max((en.coef.col(0) - w).cwiseAbs().maxCoeff(), std::abs(en.intercept(0) - b));
  c.expect(en_err < 1e-6, "EN alpha=0 vs OLS " + fmt(en_err));

  Rng rng(1004);
  MatrixXd xo = normal_matrix(rng, 50, 6);
  xo = xo.rowwise() - xo.colwise().mean();
  Eigen::HouseholderQR<MatrixXd> qr(xo);
  xo = MatrixXd(qr.householderQ() * MatrixXd::Identity(50, 6)) * std::sqrt(50.0);
  VectorXd yo = xo * VectorXd::LinSpaced(6, -1.0, 1.5) + 0.1 * normal_matrix(rng, 50, 1).col(0);
  double lasso_err = 0.0;
  for (double alpha : {0.01, 0.1, 0.4, 1.0}) {
    const auto m = fit_elastic_net(xo, yo, alpha, 1.0);
    for (Eigen::Index j = 0; j < 6; ++j)
      lasso_err = std::max(lasso_err, std::abs(m.coef(j, 0) - soft(xo.col(j).dot(yo) / 50.0, alpha)));
  }
  c.expect(lasso_err < 1e-8, "orthonormal lasso vs soft threshold " + fmt(lasso_err));

  const auto pls = fit_pls(x, y, static_cast<int>(x.cols()));
  const double pls_err = (pls.predict(x).col(0) - ols_pred).cwiseAbs().maxCoeff();
  c.expect(pls_err < 1e-6, "PLS full rank vs OLS " + fmt(pls_err));

  // Noise-free linear data: the epsilon tube with large C reproduces least squares.
  const MatrixXd xs = normal_matrix(rng, 30, 3);
  const VectorXd ys = (xs * VectorXd::LinSpaced(3, 0.5, -1.0)).array() + 0.7;
  SvrParams sp;
  sp.kernel = Kernel::Linear;
  sp.c = 1e4;
  sp.epsilon = 1e-4;
  const auto [ws, bs] = ols(xs, ys);
  const VectorXd ols_s = (xs * ws).array() + bs;
  const double svr_err = (fit_svr(xs, ys, sp).predict(xs).col(0) - ols_s).cwiseAbs().maxCoeff();
  c.expect(svr_err < 1e-2, "SVR linear vs OLS " + fmt(svr_err));

  MatrixXd ym = normal_matrix(rng, 5, 2);
  ym(2, 1) = NAN;
  const MatrixXd xm = normal_matrix(rng, 5, 4);
  auto net = MlpNetwork::initialize(4, {6, 3}, 2, rng);
  for (auto& bias : net.biases) bias.array() += 0.3;  // away from the ReLU kink
  const double wd = 0.05;
  const VectorXd grad = net.gradient(xm, ym, wd);
  const VectorXd theta = net.flat();
  double fd_err = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = 1e-6;
    MlpNetwork up = net, down = net;
    VectorXd tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    up.set_flat(tp);
    down.set_flat(tm);
    const double fd = (up.loss(xm, ym, wd) - down.loss(xm, ym, wd)) / (2.0 * h);
    fd_err = std::max(fd_err, std::abs(fd - grad(i)) / std::max(1e-6, std::abs(fd) + std::abs(grad(i))));
  }
  c.expect(fd_err < 1e-4, "MLP finite-difference relative error " + fmt(fd_err));

  GbtParams gp;
  gp.n_estimators = 60;
  gp.max_depth = 3;
  gp.subsample = 0.5;
  std::vector<double> loss;
  fit_gbt(x, ds.targets, gp, 1, &loss);
  bool monotone = loss.size() == 60;
  for (std::size_t i = 1; i < loss.size(); ++i) monotone = monotone && loss[i] <= loss[i - 1] + 1e-12;
  c.expect(monotone, "GBT training loss increased");

  c.note("EN " + fmt(en_err, 2) + ", lasso " + fmt(lasso_err, 2) + ", PLS " + fmt(pls_err, 2) + ", SVR " +
         fmt(svr_err, 2) + ", MLP fd " + fmt(fd_err, 2) + ", GBT monotone");
  return c.outcome();
}

// ---- 4: tuning protocol on planted-linear data ----

Outcome protocol() {
  using namespace qspr::tuning;
  Checks c;
  const auto s = data::synth_dataset(1143, 143, 38, 6, 0.3);
  Dataset ds{"percepta", s.table.ids, s.table.values, s.table.feature_names, s.targets, s.target_names};
  CvPlan plan;
  plan.folds = split_folds(ds.ids, 1143);
  plan.seed = 1143;

  std::vector<TrialResult> trials;
  std::size_t leakage = 0, failed = 0;
  auto sweep = [&](ModelClass cls, bool multitask) {
    SweepOptions opt;
    opt.multitask = multitask;
    auto r = run_grid(plan, ds, default_grid(cls), opt);
    leakage += r.leakage_violations;
    for (auto& t : r.trials) {
      failed += t.failed;
      trials.push_back(std::move(t));
    }
  };
  sweep(ModelClass::EN, false);
  sweep(ModelClass::MTEN, true);
  sweep(ModelClass::MLP, true);

  const auto best = overall_best(select_tuned(trials));
  const auto tested = evaluate_test(plan, {ds}, best);
  int good = 0;
  std::string summary;
  for (const auto& sel : tested) {
    const bool family = sel.model_class == ModelClass::EN || sel.model_class == ModelClass::MTEN ||
                        sel.model_class == ModelClass::MLP;
    const double valid = sel.cv.valid_r2.mean;
    const double test = sel.test ? sel.test->valid_r2.mean : NAN;
    if (family && valid > 0.8 && std::abs(test - valid) <= 0.1) ++good;
    summary += " " + sel.target + ":" + std::string(models::model_class_name(sel.model_class)) + (sel.multitask ? "/multi" : "") +
               " " + fmt(valid, 3) + "/" + fmt(test, 3);
  }
  c.expect(leakage == 0, std::to_string(leakage) + " leakage assertions");
  c.expect(good > 0, "no EN/MLP model with validation R2 > 0.8 and test within 0.1;" + summary);
  c.note(std::to_string(good) + "/" + std::to_string(tested.size()) + " targets qualify, " + std::to_string(trials.size()) +
         " trials (" + std::to_string(failed) + " failed), 0 leakage; valid/test:" + summary);
  return c.outcome();
}

// ---- 5: determinism through the CLI ----

constexpr const char* kDeterminismConfig = R"(seed = 11
[synth]
n = 100
features = 20
noise = 0.2

[sweep]
classes = ["EN", "MTEN", "BayesRidge", "PLS", "SVR", "DTR", "RFR", "GBT", "MLP"]

[sweep.grids.EN]
alpha = [0.01, 0.1]
l1_ratio = [0.5]

[sweep.grids.MTEN]
alpha = [0.01, 0.1]
l1_ratio = [0.5]

[sweep.grids.PLS]
n_components = [2, 5]

[sweep.grids.SVR]
kernel = ["rbf"]
C = [1.0]
epsilon = [0.1]

[sweep.grids.DTR]
max_depth = [3]

[sweep.grids.RFR]
n_estimators = [20]
max_features = [0.4]

[sweep.grids.GBT]
n_estimators = [20]
max_depth = [3]

[sweep.grids.MLP]
hidden_sizes = [[20]]
dropouts_trunk = [[0.5]]
weight_decay = [0.01]
lr = [0.1]
)";

Outcome determinism() {
  Checks c;
  const auto dir = scratch_dir("determinism");
  const auto config = dir / "run.toml";
  std::ofstream(config) << kDeterminismConfig;
  auto run = [&](const std::string& name, int workers) {
    const auto out = dir / name;
    const std::string cmd = std::string("\"") + QSPR_CLI + "\" -c \"" + config.string() + "\" -o \"" + out.string() +
                            "\" -w " + std::to_string(workers) + " pipeline 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    c.expect(rc == 0, name + " exited with " + std::to_string(rc));
    return out;
  };
  const auto a = run("w1_a", 1), b = run("w1_b", 1), w8 = run("w8", 8);
  for (const char* file : {"trials.csv", "selection.csv"}) {
    const auto ref = slurp(a / file);
    c.expect(!ref.empty(), std::string(file) + " missing");
    c.expect(ref == slurp(b / file), std::string(file) + " differs between identical runs");
    c.expect(ref == slurp(w8 / file), std::string(file) + " differs between --workers 1 and 8");
  }
  c.note("pipeline x3 (workers 1, 1, 8) on 9 classes: trials.csv and selection.csv byte-identical");
  return c.outcome();
}

// ---- 6: desalting ----

Outcome desalting() {
  using namespace qspr::chem;
  Checks c;
  const auto builtin = SaltList::builtin();
  const auto file = SaltList::load(fs::path(QSPR_RESOURCE_DIR) / "salts.txt");
  c.expect(builtin.size() == 38, "builtin list has " + std::to_string(builtin.size()) + " entries");
  c.expect(file.canonical_entries() == builtin.canonical_entries(), "resources/salts.txt differs from the builtin list");

  int not_idempotent = 0, fragmented = 0;
  testing::SmilesGenerator gen(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto once = desalt(parse_smiles(gen.next()), builtin);
    not_idempotent += write_smiles(desalt(once, builtin)) != write_smiles(once);
    fragmented += once.components().size() != 1;
  }
  c.expect(not_idempotent == 0, std::to_string(not_idempotent) + " of 1000 not idempotent");
  c.expect(fragmented == 0, std::to_string(fragmented) + " of 1000 left several fragments");

  const auto benzoate = desalt(parse_smiles("O=C([O-])c1ccccc1.[Na+]"), builtin);
  const bool charged = std::any_of(benzoate.atoms().begin(), benzoate.atoms().end(),
                                   [](const auto& a) { return a.formal_charge != 0; });
  c.expect(write_smiles(benzoate) == write_smiles(parse_smiles("OC(=O)c1ccccc1")) && !charged,
           "benzoate sodium gave " + write_smiles(benzoate));
  c.note("38 salts (builtin = file), 1000 random SMILES idempotent, benzoate sodium -> " + write_smiles(benzoate));
  return c.outcome();
}

// ---- 7: D-optimal ----

double direct_log_det(const MatrixXd& pool, const std::vector<int>& rows) {
  using MatrixXl = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatrixXl p = pool.cast<long double>();
  MatrixXl m = static_cast<long double>(design::kDOptimalEpsilon) * MatrixXl::Identity(pool.cols(), pool.cols());
  for (int r : rows) m += p.row(r).transpose() * p.row(r);
  return static_cast<double>(std::log(m.fullPivLu().determinant()));
}

std::vector<int> brute_force_greedy(const MatrixXd& pool, int k, std::vector<int> owned) {
  std::vector<int> chosen;
  for (int step = 0; step < k; ++step) {
    int pick = -1;
    double best = -INFINITY;
    for (int i = 0; i < pool.rows(); ++i) {
      if (std::find(owned.begin(), owned.end(), i) != owned.end()) continue;
      auto rows = owned;
      rows.push_back(i);
      const double v = direct_log_det(pool, rows);
      if (v > best) {
        best = v;
        pick = i;
      }
    }
    owned.push_back(pick);
    chosen.push_back(pick);
  }
  return chosen;
}

Outcome d_optimal() {
  Checks c;
  Rng rng(1007);
  int agreed = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(7));
    const int d = 1 + static_cast<int>(rng.index(4));
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(4, n))));
    const MatrixXd pool = normal_matrix(rng, n, d);
    agreed += design::d_optimal_select(pool, k, {}, static_cast<std::uint64_t>(trial)).chosen ==
              brute_force_greedy(pool, k, {});
  }
  c.expect(agreed == 200, std::to_string(200 - agreed) + " of 200 instances disagree");
  c.note("200 random pools (n<=8, k<=4) match the brute-force greedy oracle");
  return c.outcome();
}

// ---- 8: published data ----

Outcome published_reproduction() {
  using namespace qspr::tuning;
  const auto dir = published_data_dir();
  if (!dir) return {Status::Skip, "QSPR_PUBLISHED_DATA not set or has no measurements.csv"};
  Checks c;

  workflow::RunConfig cfg;
  cfg.base_dir = *dir;
  cfg.out_dir = scratch_dir("published");
  cfg.seed = 0;
  auto& doc = cfg.doc;
  doc["seed"] = 0;
  doc["data"]["measurements"] = "measurements.csv";
  doc["data"]["check_width"] = false;
  if (fs::exists(*dir / "folds.csv")) doc["data"]["folds"] = "folds.csv";
  auto& reps = doc["data"]["representations"];
  for (const char* name : {"percepta", "cddd", "ecfp", "molbert", "rdkit"})
    if (fs::exists(*dir / (std::string(name) + ".csv"))) reps[name] = std::string(name) + ".csv";
  if (!reps.contains("percepta") && fs::exists(*dir / "percepta_raw.csv"))
    reps["percepta"] = Json{{"path", "percepta_raw.csv"}, {"preprocess", true}};
  for (const char* name : {"percepta", "cddd", "ecfp"})
    if (!reps.contains(name)) return {Status::Skip, std::string(name) + " descriptors not found in " + dir->string()};

  // Reduced-grid smoke profile covering the EN, PLS and MLP single/multi pairs.
  auto& sweep = doc["sweep"];
  sweep["classes"] = {"EN", "MTEN", "PLS", "MLP"};
  sweep["repeats"] = 1;
  sweep["grids"]["EN"] = Json{{"alpha", {0.01, 0.05, 0.1, 0.5}}, {"l1_ratio", {0.1, 0.5, 0.9}}};
  sweep["grids"]["MTEN"] = sweep["grids"]["EN"];
  sweep["grids"]["PLS"] = Json{{"n_components", {2, 5, 10}}};
  sweep["grids"]["MLP"] = Json{{"hidden_sizes", {{50}}},
                               {"dropouts_trunk", {{0.5}}},
                               {"weight_decay", {0.01}},
                               {"lr", {0.1, 0.3}}};
  workflow::validate(cfg);
  workflow::cmd_sweep(cfg);
  const auto trials = trials_from_json(nlohmann::json::parse(slurp(cfg.out_dir / "trials.json")));

  // (a) representation ordering on PCA_0.
  std::map<std::string, double> pca0;
  for (const auto& t : trials) {
    if (t.failed) continue;
    for (std::size_t k = 0; k < t.targets.size(); ++k)
      if (t.targets[k] == "PCA_0" && std::isfinite(t.summary[k].valid_r2.mean)) {
        auto [it, fresh] = pca0.emplace(t.representation, t.summary[k].valid_r2.mean);
        if (!fresh) it->second = std::max(it->second, t.summary[k].valid_r2.mean);
      }
  }
  auto r2_of = [&](const std::string& rep) { return pca0.count(rep) ? pca0[rep] : -INFINITY; };
  c.expect(r2_of("percepta") > r2_of("cddd"), "PCA_0: percepta " + fmt(r2_of("percepta")) + " <= cddd " + fmt(r2_of("cddd")));
  c.expect(r2_of("percepta") > r2_of("ecfp"), "PCA_0: percepta " + fmt(r2_of("percepta")) + " <= ecfp " + fmt(r2_of("ecfp")));

  // (b) tuned percepta models.
  std::map<std::string, double> percepta;
  for (const auto& sel : select_tuned(trials))
    if (sel.representation == "percepta") {
      auto [it, fresh] = percepta.emplace(sel.target, sel.cv.valid_r2.mean);
      if (!fresh) it->second = std::max(it->second, sel.cv.valid_r2.mean);
    }
  std::string tuned;
  for (const char* target : {"BBB", "DOD", "L", "H", "PCA_0"}) {
    const double v = percepta.count(target) ? percepta[target] : -INFINITY;
    c.expect(v > 0.4, std::string("percepta ") + target + " validation R2 " + fmt(v));
    tuned += std::string(" ") + target + "=" + fmt(v, 3);
  }

  // (c) multitask versus single-task.
  const auto cmp = compare_single_vs_multi(trials);
  const double share = cmp.comparable ? static_cast<double>(cmp.multi_wins) / static_cast<double>(cmp.comparable) : 0.0;
  c.expect(share > 0.7, "multitask wins " + std::to_string(cmp.multi_wins) + "/" + std::to_string(cmp.comparable));
  c.note("PCA_0 percepta " + fmt(r2_of("percepta"), 3) + ", cddd " + fmt(r2_of("cddd"), 3) + ", ecfp " +
         fmt(r2_of("ecfp"), 3) + ";" + tuned + "; multitask wins " + std::to_string(cmp.multi_wins) + "/" +
         std::to_string(cmp.comparable));
  return c.outcome();
}

// ---- 9: metrics ----

Outcome metric_cases() {
  using namespace qspr::tuning;
  Checks c;
  VectorXd y(4);
  y << 1.0, 2.0, 3.0, 4.0;
  c.expect(metric_r2(y, y) == 1.0 && metric_corr(y, y) == 1.0 && metric_rmse(y, y) == 0.0, "perfect prediction");
  c.expect(metric_r2(y, VectorXd::Constant(4, 2.5)) == 0.0, "mean predictor R2");
  c.expect(metric_rmse(y, VectorXd::Constant(4, 2.5)) == std::sqrt(1.25), "mean predictor RMSE");
  const VectorXd centered = y.array() - 2.5;
  c.expect(metric_corr(centered, -centered) == -1.0, "anti-correlated corr");
  c.expect(metric_r2(y, y.reverse()) == -3.0, "anti-correlated R2 = 1 - 20/5");
  // A constant offset from the mean: SSE 9 against SST 5.
  const double r2 = metric_r2(y, VectorXd::Constant(4, 3.5));
  c.expect(std::abs(r2 - (-0.8)) < 1e-15, "negative R2 " + fmt(r2));
  c.expect(format_summary({-0.0553, 0.0}) == "-0.0553 (0.0000)", "negative R2 formatting");
  c.note("perfect, mean-predictor, anti-correlated exact; negative R2 " + fmt(r2, 4) + " representable");
  return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"assay math", assay_math},         {"PCA oracle", pca_oracle},       {"model oracles", model_oracles},
      {"tuning protocol", protocol},      {"determinism", determinism},     {"desalting", desalting},
      {"D-optimal design", d_optimal},    {"published data", published_reproduction}, {"metrics", metric_cases},
  };
  const std::map<int, double> budget{{1, 5.0}, {2, 10.0}, {3, 120.0}, {4, 900.0}, {8, 1200.0}};

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status == Status::Pass && budget.count(id) && secs > budget.at(id)) {
      o.status = Status::Fail;
      o.detail = "took " + fmt(secs) + " s, budget " + fmt(budget.at(id)) + " s; " + o.detail;
    }
    const char* tag = o.status == Status::Pass ? "PASS" : (o.status == Status::Fail ? "FAIL" : "SKIP");
    std::printf("[%s] %d %s (%.1f s): %s\n", tag, id, criteria[i].first.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    failures += o.status == Status::Fail;
  }
  return failures == 0 ? 0 : 1;
}
