#include "qspr/models/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qspr/error.hpp"
#include "qspr/models/linear.hpp"
#include "qspr/models/mlp.hpp"
#include "qspr/models/svr.hpp"
#include "qspr/models/tree.hpp"
#include "qspr/random.hpp"

namespace qspr::models {

namespace {

constexpr int kFormatVersion = 1;

// One independent model per target column.
class PerTarget : public Regressor {
 public:
  std::vector<std::shared_ptr<const Regressor>> parts;
  std::size_t features = 0;

  Matrix predict(const Matrix& x) const override {
    Matrix p(x.rows(), static_cast<Eigen::Index>(parts.size()));
    for (std::size_t k = 0; k < parts.size(); ++k) p.col(static_cast<Eigen::Index>(k)) = parts[k]->predict(x).col(0);
    return p;
  }
  nlohmann::json parameters() const override {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : parts) a.push_back(p->parameters());
    return {{"targets", a}, {"n_features", features}};
  }
  double effective_parameters() const override {
    double s = 0.0;
    for (const auto& p : parts) s += p->effective_parameters();
    return parts.empty() ? 0.0 : s / static_cast<double>(parts.size());
  }
  std::size_t n_features() const override { return features; }
  std::size_t n_outputs() const override { return parts.size(); }
  bool converged() const override {
    return std::all_of(parts.begin(), parts.end(), [](const auto& p) { return p->converged(); });
  }
};

void check_keys(const RegressorSpec& spec, std::initializer_list<const char*> allowed) {
  if (!spec.params.is_object()) throw Error(ErrorKind::ConfigError, "hyperparameters must be a key/value table");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : spec.params.items())
    if (!ok.count(k))
      throw Error(ErrorKind::ConfigError,
                  "unknown hyperparameter '" + k + "' for " + std::string(model_class_name(spec.model_class)));
}

template <typename T>
T get(const Hyperparams& p, const char* key, T fallback) {
  if (!p.contains(key)) return fallback;
  try {
    return p.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::ConfigError, std::string("hyperparameter '") + key + "' has the wrong type");
  }
}

double get_dropout(const Hyperparams& p) {
  if (p.contains("dropouts_trunk")) {
    const auto& d = p.at("dropouts_trunk");
    if (d.is_array()) return d.empty() ? 0.0 : d.front().get<double>();
    return d.get<double>();
  }
  return get<double>(p, "dropout", 0.0);
}

std::vector<int> get_hidden(const Hyperparams& p) {
  if (!p.contains("hidden_sizes")) return {50};
  const auto& h = p.at("hidden_sizes");
  if (h.is_number_integer()) return {h.get<int>()};
  return h.get<std::vector<int>>();
}

std::shared_ptr<const Regressor> fit_single(const RegressorSpec& spec, const Matrix& x, const Vector& y,
                                            std::uint64_t seed) {
  const auto& p = spec.params;
  switch (spec.model_class) {
    case ModelClass::EN:
      return std::make_shared<LinearModel>(
          fit_elastic_net(x, y, get<double>(p, "alpha", 1.0), get<double>(p, "l1_ratio", 0.5)));
    case ModelClass::BayesRidge:
      return std::make_shared<LinearModel>(
          fit_bayesian_ridge(x, y, get<double>(p, "tol", 1e-3), get<int>(p, "max_iter", 300)));
    case ModelClass::SVR: {
      SvrParams sp;
      sp.kernel = parse_kernel(get<std::string>(p, "kernel", "rbf"));
      sp.degree = get<int>(p, "degree", 3);
      sp.gamma = p.contains("gamma") ? p.at("gamma") : nlohmann::json("scale");
      sp.c = get<double>(p, "C", 1.0);
      sp.epsilon = get<double>(p, "epsilon", 0.1);
      return std::make_shared<SvrModel>(fit_svr(x, y, sp));
    }
    case ModelClass::DTR: {
      TreeParams tp;
      tp.min_samples_leaf = get<int>(p, "min_samples_leaf", 1);
      tp.min_samples_split = get<int>(p, "min_samples_split", 2);
      tp.max_depth = get<int>(p, "max_depth", -1);
      return std::make_shared<TreeEnsemble>(fit_decision_tree(x, y, tp, seed));
    }
    case ModelClass::RFR: {
      ForestParams fp;
      fp.tree.min_samples_leaf = get<int>(p, "min_samples_leaf", 1);
      fp.tree.min_samples_split = get<int>(p, "min_samples_split", 2);
      fp.tree.max_depth = get<int>(p, "max_depth", -1);
      fp.tree.max_features = get<double>(p, "max_features", 1.0);
      fp.n_estimators = get<int>(p, "n_estimators", 1000);
      fp.bootstrap = get<bool>(p, "bootstrap", true);
      return std::make_shared<TreeEnsemble>(fit_random_forest(x, y, fp, seed));
    }
    default:
      break;
  }
  throw Error(ErrorKind::InvalidArgument, "not a single-task class");
}

std::shared_ptr<const Regressor> single_from_parameters(ModelClass c, const nlohmann::json& j) {
  switch (c) {
    case ModelClass::EN:
    case ModelClass::BayesRidge:
      return std::make_shared<LinearModel>(LinearModel::from_parameters(j));
    case ModelClass::SVR:
      return std::make_shared<SvrModel>(SvrModel::from_parameters(j));
    case ModelClass::DTR:
    case ModelClass::RFR:
      return std::make_shared<TreeEnsemble>(TreeEnsemble::from_parameters(j));
    default:
      break;
  }
  throw Error(ErrorKind::ParseError, "not a single-task class");
}

}  // namespace

std::string_view model_class_name(ModelClass c) noexcept {
  switch (c) {
    case ModelClass::DTR: return "DTR";
    case ModelClass::RFR: return "RFR";
    case ModelClass::EN: return "EN";
    case ModelClass::MTEN: return "MTEN";
    case ModelClass::BayesRidge: return "BayesRidge";
    case ModelClass::PLS: return "PLS";
    case ModelClass::SVR: return "SVR";
    case ModelClass::GBT: return "GBT";
    case ModelClass::MLP: return "MLP";
  }
  return "?";
}

ModelClass parse_model_class(std::string_view name) {
  if (name == "XGB") return ModelClass::GBT;
  for (auto c : all_model_classes())
    if (name == model_class_name(c)) return c;
  throw Error(ErrorKind::ConfigError, "unknown model class '" + std::string(name) + "'");
}

const std::vector<ModelClass>& all_model_classes() {
  static const std::vector<ModelClass> kAll{ModelClass::DTR, ModelClass::RFR, ModelClass::EN,
                                            ModelClass::MTEN, ModelClass::BayesRidge, ModelClass::PLS,
                                            ModelClass::SVR, ModelClass::GBT, ModelClass::MLP};
  return kAll;
}

bool is_multitask(ModelClass c) noexcept {
  return c == ModelClass::MTEN || c == ModelClass::PLS || c == ModelClass::GBT || c == ModelClass::MLP;
}

nlohmann::json spec_to_json(const RegressorSpec& spec) {
  return {{"model_class", model_class_name(spec.model_class)}, {"params", spec.params}, {"seed", spec.seed}};
}

RegressorSpec spec_from_json(const nlohmann::json& j) {
  RegressorSpec s;
  s.model_class = parse_model_class(j.at("model_class").get<std::string>());
  s.params = j.value("params", Hyperparams::object());
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

TrainedModel::TrainedModel(RegressorSpec spec, std::shared_ptr<const Regressor> impl)
    : spec_(std::move(spec)), impl_(std::move(impl)) {}

Matrix TrainedModel::predict(const Matrix& x) const {
  if (!impl_) throw Error(ErrorKind::InvalidArgument, "model is not fitted");
  if (static_cast<std::size_t>(x.cols()) != impl_->n_features())
    throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(impl_->n_features()) +
                                                  " features, got " + std::to_string(x.cols()));
  return impl_->predict(x);
}

nlohmann::json TrainedModel::to_json() const {
  return {{"format", "qspr-model"},
          {"version", kFormatVersion},
          {"spec", spec_to_json(spec_)},
          {"n_features", impl_->n_features()},
          {"n_outputs", impl_->n_outputs()},
          {"parameters", impl_->parameters()}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "qspr-model" || j.value("version", 0) != kFormatVersion)
      throw Error(ErrorKind::ParseError, "not a version-1 qspr model document");
    RegressorSpec spec = spec_from_json(j.at("spec"));
    const auto& p = j.at("parameters");
    std::shared_ptr<const Regressor> impl;
    switch (spec.model_class) {
      case ModelClass::MTEN:
        impl = std::make_shared<LinearModel>(LinearModel::from_parameters(p));
        break;
      case ModelClass::PLS:
        impl = std::make_shared<PlsModel>(PlsModel::from_parameters(p));
        break;
      case ModelClass::GBT:
        impl = std::make_shared<TreeEnsemble>(TreeEnsemble::from_parameters(p));
        break;
      case ModelClass::MLP:
        impl = std::make_shared<MlpModel>(MlpModel::from_parameters(p));
        break;
      default: {
        auto pt = std::make_shared<PerTarget>();
        pt->features = p.at("n_features").get<std::size_t>();
        for (const auto& part : p.at("targets")) pt->parts.push_back(single_from_parameters(spec.model_class, part));
        impl = pt;
      }
    }
    return TrainedModel(std::move(spec), std::move(impl));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("model document: ") + e.what());
  }
}

void observed_rows(const Matrix& x, const Matrix& y, Eigen::Index column, Matrix& x_out, Vector& y_out) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    if (!std::isnan(y(i, column))) keep.push_back(i);
  x_out.resize(static_cast<Eigen::Index>(keep.size()), x.cols());
  y_out.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    x_out.row(static_cast<Eigen::Index>(r)) = x.row(keep[r]);
    y_out(static_cast<Eigen::Index>(r)) = y(keep[r], column);
  }
}

TrainedModel fit(const RegressorSpec& spec, const Matrix& x, const Matrix& y, const FitOptions& options) {
  if (x.rows() != y.rows()) throw Error(ErrorKind::DimensionMismatch, "X and Y have different row counts");
  if (y.cols() < 1) throw Error(ErrorKind::InvalidArgument, "no target columns");
  const auto& p = spec.params;
  std::shared_ptr<const Regressor> impl;
  switch (spec.model_class) {
    case ModelClass::MTEN:
      check_keys(spec, {"alpha", "l1_ratio"});
      impl = std::make_shared<LinearModel>(
          fit_multitask_elastic_net(x, y, get<double>(p, "alpha", 1.0), get<double>(p, "l1_ratio", 0.5)));
      break;
    case ModelClass::PLS:
      check_keys(spec, {"n_components"});
      impl = std::make_shared<PlsModel>(fit_pls(x, y, get<int>(p, "n_components", 2)));
      break;
    case ModelClass::GBT: {
      check_keys(spec, {"n_estimators", "max_depth", "lambda", "alpha", "subsample", "learning_rate", "objective"});
      GbtParams gp;
      gp.n_estimators = get<int>(p, "n_estimators", 100);
      gp.max_depth = get<int>(p, "max_depth", 6);
      gp.lambda = get<double>(p, "lambda", 1.0);
      gp.alpha = get<double>(p, "alpha", 0.0);
      gp.subsample = get<double>(p, "subsample", 1.0);
      gp.learning_rate = get<double>(p, "learning_rate", 0.3);
      if (get<std::string>(p, "objective", "reg:squarederror") != "reg:squarederror")
        throw Error(ErrorKind::ConfigError, "only the squared-error objective is supported");
      impl = std::make_shared<TreeEnsemble>(fit_gbt(x, y, gp, spec.seed));
      break;
    }
    case ModelClass::MLP: {
      check_keys(spec, {"hidden_sizes", "dropout", "dropouts_trunk", "weight_decay", "lr", "learning_rate",
                        "epochs", "patience", "batch_size", "max_grad_norm"});
      MlpParams mp;
      mp.hidden = get_hidden(p);
      mp.dropout = get_dropout(p);
      mp.weight_decay = get<double>(p, "weight_decay", 0.0);
      mp.learning_rate = p.contains("lr") ? get<double>(p, "lr", 0.1) : get<double>(p, "learning_rate", 0.1);
      mp.max_epochs = get<int>(p, "epochs", 200);
      mp.patience = get<int>(p, "patience", 20);
      mp.batch_size = get<int>(p, "batch_size", 16);
      mp.max_grad_norm = get<double>(p, "max_grad_norm", mp.max_grad_norm);
      impl = std::make_shared<MlpModel>(fit_mlp(x, y, mp, spec.seed, options));
      break;
    }
    default: {
      switch (spec.model_class) {
        case ModelClass::EN: check_keys(spec, {"alpha", "l1_ratio"}); break;
        case ModelClass::BayesRidge: check_keys(spec, {"tol", "max_iter"}); break;
        case ModelClass::SVR: check_keys(spec, {"kernel", "degree", "gamma", "C", "epsilon"}); break;
        case ModelClass::DTR: check_keys(spec, {"min_samples_leaf", "min_samples_split", "max_depth"}); break;
        default:
          check_keys(spec, {"n_estimators", "min_samples_leaf", "min_samples_split", "max_depth", "max_features",
                            "bootstrap"});
      }
      auto pt = std::make_shared<PerTarget>();
      pt->features = static_cast<std::size_t>(x.cols());
      for (Eigen::Index k = 0; k < y.cols(); ++k) {
        Matrix xo;
        Vector yo;
        observed_rows(x, y, k, xo, yo);
        if (yo.size() == 0) throw Error(ErrorKind::EmptyInput, "target column " + std::to_string(k) + " has no observations");
        pt->parts.push_back(fit_single(spec, xo, yo, derive_seed(spec.seed, {static_cast<std::uint64_t>(k)})));
      }
      impl = pt;
    }
  }
  return TrainedModel(spec, std::move(impl));
}

}  // namespace qspr::models
