#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <openssl/evp.h>

#include "internal.hpp"
#include "qspr/analyze/analyze.hpp"
#include "qspr/chem/scaffold.hpp"
#include "qspr/chem/smiles.hpp"
#include "qspr/chem/standardize.hpp"
#include "qspr/design/design.hpp"
#include "qspr/error.hpp"

#ifndef QSPR_VERSION
#define QSPR_VERSION "0.0.0"
#endif

namespace qspr::workflow {

using namespace detail;
using models::ModelClass;

namespace {

constexpr double kDefaultThreshold = 0.5;

void merge(Report& into, Report&& from) {
  for (auto& f : from.files)
    if (std::find(into.files.begin(), into.files.end(), f) == into.files.end()) into.files.push_back(std::move(f));
  for (auto& w : from.warnings) into.warnings.push_back(std::move(w));
  for (auto& f : from.failures) into.failures.push_back(std::move(f));
  into.cells += from.cells;
  into.failed_cells += from.failed_cells;
}

std::string csv_text(const data::CsvTable& t) { return data::format_csv(t); }

// ---- sweep definition ----

struct SweepSpec {
  std::vector<ModelClass> classes;
  std::vector<bool> modes;  // false = single-task, true = multitask
  std::map<ModelClass, tuning::Grid> grids;
};

SweepSpec sweep_spec(const RunConfig& cfg) {
  SweepSpec s;
  if (auto names = get_strings(cfg, "sweep.classes")) {
    for (const auto& n : *names) s.classes.push_back(models::parse_model_class(n));
  } else {
    s.classes = models::all_model_classes();
  }
  const auto modes = get_strings(cfg, "sweep.modes").value_or(std::vector<std::string>{"single", "multi"});
  for (const auto& m : modes) {
    if (m == "single") s.modes.push_back(false);
    else if (m == "multi") s.modes.push_back(true);
    else throw Error(ErrorKind::ConfigError, "sweep.modes: unknown mode '" + m + "' (single or multi)");
  }
  const auto* grids = find(cfg.doc, "sweep.grids");
  if (grids && !grids->is_object()) throw Error(ErrorKind::ConfigError, "sweep.grids must be a table");
  for (ModelClass c : s.classes) s.grids[c] = tuning::default_grid(c);
  if (grids) {
    for (const auto& [name, axes] : grids->items()) {
      const ModelClass c = models::parse_model_class(name);
      if (!axes.is_object()) throw Error(ErrorKind::ConfigError, "sweep.grids." + name + " must be a table of lists");
      for (const auto& [k, v] : axes.items())
        if (!v.is_array() || v.empty())
          throw Error(ErrorKind::ConfigError, "sweep.grids." + name + "." + k + " must be a non-empty list");
      s.grids[c] = tuning::expand_grid(c, axes);
    }
  }
  return s;
}

std::vector<std::string> single_targets(const RunConfig& cfg, const Targets& t) {
  return get_strings(cfg, "sweep.targets").value_or(t.names());
}

std::vector<std::string> multi_targets(const RunConfig& cfg, const Targets& t) {
  return get_strings(cfg, "sweep.multitask_targets").value_or(t.base_names);
}

std::vector<const tuning::Dataset*> sweep_datasets(const RunConfig& cfg, const Inputs& in) {
  std::vector<const tuning::Dataset*> out;
  const auto wanted = get_strings(cfg, "sweep.representations");
  if (!wanted) {
    for (const auto& d : in.datasets) out.push_back(&d);
    return out;
  }
  for (const auto& w : *wanted) {
    const auto it = std::find_if(in.datasets.begin(), in.datasets.end(),
                                 [&](const tuning::Dataset& d) { return d.representation == w; });
    if (it == in.datasets.end()) throw Error(ErrorKind::ConfigError, "sweep.representations: no data for " + w);
    out.push_back(&*it);
  }
  return out;
}

std::string mode_name(bool multitask) { return multitask ? "multi" : "single"; }

// ---- sweep ----

struct SweepOutput {
  std::vector<tuning::TrialResult> trials;
  std::size_t leakage = 0;
};

SweepOutput run_sweep(const RunConfig& cfg, const Inputs& in, Report& report) {
  const auto spec = sweep_spec(cfg);
  const auto single = single_targets(cfg, in.targets);
  const auto multi = multi_targets(cfg, in.targets);
  SweepOutput out;
  for (const auto* d : sweep_datasets(cfg, in)) {
    const auto single_data = with_targets(*d, single);
    const auto multi_data = with_targets(*d, multi);
    for (ModelClass c : spec.classes) {
      for (bool mt : spec.modes) {
        if (c == ModelClass::MTEN && !mt) continue;
        if (mt && !models::is_multitask(c)) continue;
        const std::string cell = d->representation + "/" + std::string(models::model_class_name(c)) + "/" + mode_name(mt);
        ++report.cells;
        try {
          auto r = tuning::run_grid(in.plan, mt ? multi_data : single_data, spec.grids.at(c), {cfg.workers, mt});
          out.leakage += r.leakage_violations;
          for (auto& w : r.warnings) report.warnings.push_back(cell + ": " + w);
          const bool all_failed = std::all_of(r.trials.begin(), r.trials.end(),
                                              [](const tuning::TrialResult& t) { return t.failed; });
          if (all_failed) {
            ++report.failed_cells;
            report.failures.push_back(cell + ": every trial failed");
          }
          for (auto& t : r.trials) out.trials.push_back(std::move(t));
        } catch (const Error& e) {
          ++report.failed_cells;
          report.failures.push_back(cell + ": " + e.what());
        }
      }
    }
  }
  if (out.leakage > 0) report.failures.push_back("leakage guard fired " + std::to_string(out.leakage) + " times");
  return out;
}

void write_sweep(const RunConfig& cfg, const SweepOutput& s, Report& report) {
  write_output(cfg, report, "trials.csv", tuning::trials_csv(s.trials));
  write_output(cfg, report, "runs.csv", tuning::runs_csv(s.trials));
  write_output(cfg, report, "trials.json", tuning::trials_to_json(s.trials).dump(1));
  write_output(cfg, report, "comparison.csv", tuning::comparison_csv(tuning::compare_single_vs_multi(s.trials)));
  nlohmann::ordered_json summary;
  summary["cells"] = report.cells;
  summary["failed_cells"] = report.failed_cells;
  summary["trials"] = s.trials.size();
  summary["failed_trials"] =
      std::count_if(s.trials.begin(), s.trials.end(), [](const tuning::TrialResult& t) { return t.failed; });
  summary["leakage_violations"] = s.leakage;
  write_output(cfg, report, "sweep_summary.json", summary.dump(1));
}

// ---- selection ----

std::vector<tuning::Selection> tune_all(const std::vector<tuning::TrialResult>& trials, Report& report) {
  // One group per (representation, class, mode, single-task target) so that a
  // fully failed group does not hide the others.
  std::vector<std::string> order;
  std::map<std::string, std::vector<tuning::TrialResult>> groups;
  for (const auto& t : trials) {
    std::string key = t.representation + "/" + std::string(models::model_class_name(t.model_class)) + "/" +
                      mode_name(t.multitask);
    if (!t.multitask && !t.targets.empty()) key += "/" + t.targets.front();
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(t);
  }
  std::vector<tuning::Selection> out;
  for (const auto& key : order) {
    try {
      for (auto& s : tuning::select_tuned(groups[key])) out.push_back(std::move(s));
    } catch (const Error& e) {
      report.warnings.push_back(key + ": no selection, " + e.what());
    }
  }
  return out;
}

void write_selection(const RunConfig& cfg, const std::vector<tuning::Selection>& tuned, Report& report) {
  write_output(cfg, report, "selection.csv", tuning::selection_csv(tuned));
  write_output(cfg, report, "selection.json", tuning::selections_to_json(tuned).dump(1));
  write_output(cfg, report, "best.csv", tuning::selection_csv(tuning::overall_best(tuned)));
}

std::vector<tuning::TrialResult> read_trials(const RunConfig& cfg) {
  const auto path = input_path(cfg, "select.trials").value_or(cfg.out_dir / "trials.json");
  if (!fs::exists(path)) throw Error(ErrorKind::ConfigError, "trials file not found: " + path.string() + " (run sweep first)");
  try {
    return tuning::trials_from_json(nlohmann::json::parse(data::read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, path.string() + ": " + e.what());
  }
}

std::vector<tuning::Selection> read_selections(const RunConfig& cfg) {
  const auto path = input_path(cfg, "test.selection").value_or(cfg.out_dir / "selection.json");
  if (!fs::exists(path))
    throw Error(ErrorKind::ConfigError, "selection file not found: " + path.string() + " (run select first)");
  try {
    return tuning::selections_from_json(nlohmann::json::parse(data::read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, path.string() + ": " + e.what());
  }
}

// ---- test ----

void run_test(const RunConfig& cfg, const Inputs& in, const std::vector<tuning::Selection>& tuned, Report& report) {
  const double threshold = get_number(cfg, "select.threshold", kDefaultThreshold);
  const auto scope = get_string(cfg, "select.test", "best");
  const auto candidates =
      tuning::filter_by_validation(scope == "tuned" ? tuned : tuning::overall_best(tuned), threshold);
  const auto single = single_targets(cfg, in.targets);
  const auto multi = multi_targets(cfg, in.targets);
  std::vector<tuning::Selection> tested;
  for (const auto& s : candidates) {
    const auto d = std::find_if(in.datasets.begin(), in.datasets.end(),
                                [&](const tuning::Dataset& x) { return x.representation == s.representation; });
    const std::string label = s.representation + "/" + std::string(models::model_class_name(s.model_class)) + "/" +
                              mode_name(s.multitask) + "/" + s.target;
    if (d == in.datasets.end()) {
      report.failures.push_back(label + ": representation not loaded");
      continue;
    }
    try {
      const auto data = with_targets(*d, s.multitask ? s.trained_targets : single);
      auto r = tuning::evaluate_test(in.plan, {data}, {s}, cfg.workers);
      tested.push_back(std::move(r.front()));
    } catch (const Error& e) {
      report.failures.push_back(label + ": test evaluation failed, " + e.what());
    }
  }
  if (candidates.empty())
    report.warnings.push_back("no selected model passed the validation threshold " + data::format_double(threshold));
  write_output(cfg, report, "test.csv", tuning::selection_csv(tested));
  write_output(cfg, report, "test.json", tuning::selections_to_json(tested).dump(1));
}

// ---- importance ----

void run_importance(const RunConfig& cfg, const Inputs& in, const std::vector<tuning::Selection>& tuned,
                    Report& report) {
  std::vector<tuning::Selection> en;
  for (const auto& s : tuned)
    if (s.model_class == ModelClass::EN && !s.multitask) en.push_back(s);
  if (en.empty()) {
    report.warnings.push_back("importance: no tuned single-task EN models");
    return;
  }
  std::string rep = get_string(cfg, "importance.representation", "");
  if (rep.empty()) {
    const bool has_percepta = std::any_of(en.begin(), en.end(), [](const auto& s) { return s.representation == "percepta"; });
    rep = has_percepta ? "percepta" : en.front().representation;
  }
  const auto d = std::find_if(in.datasets.begin(), in.datasets.end(),
                              [&](const tuning::Dataset& x) { return x.representation == rep; });
  if (d == in.datasets.end()) throw Error(ErrorKind::ConfigError, "importance.representation: no data for " + rep);
  const auto m = analyze::feature_importance(in.plan, with_targets(*d, single_targets(cfg, in.targets)), en);
  if (m.targets.empty()) report.warnings.push_back("importance: no EN selections for " + rep);
  write_output(cfg, report, "importance.csv", analyze::importance_csv(m));
  write_output(cfg, report, "importance.svg", analyze::importance_svg(m));
}

// ---- profiles ----

analyze::PropertyTable load_properties(const RunConfig& cfg) {
  analyze::PropertyTable p;
  const auto path = input_path(cfg, "data.properties");
  if (!path) return p;
  const auto csv = data::read_csv(*path);
  const auto src = path->string();
  const auto id = csv.require_column("compound_id", src);
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (c == id) continue;
    cols.push_back(c);
    p.names.push_back(csv.header[c]);
  }
  p.values.resize(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != csv.header.size())
      throw Error(ErrorKind::ParseError, src + ": row " + std::to_string(r + 2) + " has the wrong number of fields");
    p.ids.push_back(row[id]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      // Non-numeric columns (names, classes) are kept as missing values.
      std::optional<double> v;
      try {
        v = data::parse_number(row[cols[j]], src, r + 2, csv.header[cols[j]]);
      } catch (const Error&) {
      }
      p.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v ? *v : std::nan("");
    }
  }
  return p;
}

std::vector<Membrane> profile_membranes(const RunConfig& cfg) {
  std::vector<Membrane> out;
  for (const auto& n : get_strings(cfg, "profiles.membranes").value_or(std::vector<std::string>{"H", "BBB", "DOD"})) {
    const auto m = parse_membrane(n);
    if (!m) throw Error(ErrorKind::ConfigError, "profiles.membranes: unknown membrane '" + n + "'");
    out.push_back(*m);
  }
  return out;
}

void run_profiles(const RunConfig& cfg, const Targets& t, Report& report) {
  if (t.base.cols() != static_cast<Eigen::Index>(kMembraneCount))
    throw Error(ErrorKind::ConfigError, "profiles need the six membrane targets");
  const auto k = get_int(cfg, "profiles.k", 10);
  if (k < 1) throw Error(ErrorKind::ConfigError, "profiles.k must be positive");
  const auto props = get_strings(cfg, "profiles.properties")
                         .value_or(std::vector<std::string>{"logP", "logD7.4", "TPSA", "SASA"});
  const auto r = analyze::top_bottom_profiles(t.ids, t.base, profile_membranes(cfg), static_cast<std::size_t>(k),
                                              load_properties(cfg), props);
  for (const auto& w : r.warnings) report.warnings.push_back("profiles: " + w);
  if (!r.missing_properties.empty()) {
    std::string msg = "profiles: missing property columns:";
    for (const auto& m : r.missing_properties) msg += " " + m;
    report.warnings.push_back(msg);
  }
  write_output(cfg, report, "profiles.csv", analyze::profiles_csv(r));
  write_output(cfg, report, "profile_sets.csv", analyze::profile_sets_csv(r));
  write_output(cfg, report, "profile_overlaps.csv", analyze::overlaps_csv(r));
  write_output(cfg, report, "profiles.svg", analyze::profiles_svg(r));
  std::string checks;
  for (const auto& c : r.trend_checks) checks += c + "\n";
  write_output(cfg, report, "profile_checks.txt", checks);
}

// ---- SMILES inputs ----

struct SmilesInput {
  std::vector<std::string> ids;
  std::vector<std::string> smiles;
};

SmilesInput load_smiles(const RunConfig& cfg) {
  const auto path = require_input(cfg, "data.smiles");
  const auto csv = data::read_csv(path);
  const auto src = path.string();
  const auto id = csv.require_column(get_string(cfg, "data.id_column", "compound_id"), src);
  const auto smi = csv.require_column(get_string(cfg, "data.smiles_column", "smiles"), src);
  SmilesInput in;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != csv.header.size())
      throw Error(ErrorKind::ParseError, src + ": row " + std::to_string(r + 2) + " has the wrong number of fields");
    in.ids.push_back(row[id]);
    in.smiles.push_back(row[smi]);
  }
  return in;
}

chem::SaltList salt_list(const RunConfig& cfg) {
  if (auto p = input_path(cfg, "desalt.salts")) return chem::SaltList::load(*p);
  return chem::SaltList::builtin();
}

struct DesaltOutput {
  std::vector<std::string> desalted;  // empty on failure
  std::vector<std::string> errors;
};

DesaltOutput desalt_all(const SmilesInput& in, const chem::SaltList& salts) {
  DesaltOutput out;
  for (const auto& s : in.smiles) {
    try {
      out.desalted.push_back(chem::write_smiles(chem::desalt(chem::parse_smiles(s), salts)));
      out.errors.emplace_back();
    } catch (const Error& e) {
      out.desalted.emplace_back();
      out.errors.emplace_back(e.what());
    }
  }
  return out;
}

void run_scaffolds(const RunConfig& cfg, Report& report) {
  const auto in = load_smiles(cfg);
  const auto mode_name = get_string(cfg, "scaffolds.mode", "murcko");
  const auto mode = mode_name == "generic" ? analyze::ScaffoldMode::Generic : analyze::ScaffoldMode::Murcko;
  std::vector<std::string> smiles = in.smiles;
  if (get_bool(cfg, "scaffolds.desalt", true)) {
    const auto d = desalt_all(in, salt_list(cfg));
    for (std::size_t i = 0; i < smiles.size(); ++i)
      if (d.errors[i].empty()) smiles[i] = d.desalted[i];
  }
  const auto r = analyze::scaffold_report(in.ids, smiles, mode);
  for (const auto& [id, msg] : r.failures) report.warnings.push_back("scaffolds: " + id + ": " + msg);
  write_output(cfg, report, "scaffolds.csv", analyze::scaffolds_csv(r));
  write_output(cfg, report, "scaffold_repeats.csv", analyze::scaffold_repeats_csv(r));
  nlohmann::ordered_json summary;
  summary["compounds"] = in.ids.size();
  summary["unique_scaffolds"] = r.unique;
  summary["failures"] = r.failures.size();
  write_output(cfg, report, "scaffold_summary.json", summary.dump(1));
}

// ---- PCA ----

std::string pca_scatter_svg(const Targets& t, const std::vector<std::string>& classes) {
  const double w = 480, h = 480, pad = 48;
  std::vector<std::pair<double, double>> pts;
  for (auto r : t.pca_rows) pts.emplace_back(t.pca_scores(static_cast<Eigen::Index>(r), 0),
                                              t.pca_scores(static_cast<Eigen::Index>(r), 1));
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!pts.empty()) {
    x0 = x1 = pts[0].first;
    y0 = y1 = pts[0].second;
    for (auto [x, y] : pts) {
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::map<std::string, int> colour;
  for (const auto& c : classes)
    if (!colour.count(c)) colour.emplace(c, static_cast<int>(colour.size()) % 6);
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                w, h);
  s += buf;
  s += "<line x1=\"48\" y1=\"432\" x2=\"432\" y2=\"432\" stroke=\"black\"/>\n"
       "<line x1=\"48\" y1=\"48\" x2=\"48\" y2=\"432\" stroke=\"black\"/>\n"
       "<text x=\"240\" y=\"465\" text-anchor=\"middle\">PCA_0</text>\n"
       "<text x=\"16\" y=\"240\" transform=\"rotate(-90 16 240)\" text-anchor=\"middle\">PCA_1</text>\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double px = pad + (pts[i].first - x0) / (x1 - x0) * (w - 2 * pad);
    const double py = h - pad - (pts[i].second - y0) / (y1 - y0) * (h - 2 * pad);
    const char* fill = classes.empty() ? palette[0] : palette[colour.at(classes[i])];
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\" fill-opacity=\"0.8\"/>\n", px,
                  py, fill);
    s += buf;
  }
  int row = 0;
  for (const auto& [name, c] : colour) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%d\" cy=\"%d\" r=\"4\" fill=\"%s\"/><text x=\"%d\" y=\"%d\">", 380,
                  60 + 16 * row, palette[c], 390, 64 + 16 * row);
    s += buf;
    s += name + "</text>\n";
    ++row;
  }
  s += "</svg>\n";
  return s;
}

void run_pca(const RunConfig& cfg, const Targets& t, Report& report) {
  if (!t.pca) throw Error(ErrorKind::DegenerateInput, "no PCA model could be fitted");
  for (const auto& w : t.warnings) report.warnings.push_back("pca: " + w);
  const auto& m = *t.pca;

  data::CsvTable scores;
  scores.header = {"compound_id"};
  for (std::size_t i = 0; i < kPcaTargets; ++i) scores.header.push_back("PCA_" + std::to_string(i));
  for (std::size_t r = 0; r < t.ids.size(); ++r) {
    std::vector<std::string> row{t.ids[r]};
    for (Eigen::Index c = 0; c < t.pca_scores.cols(); ++c)
      row.push_back(data::format_double(t.pca_scores(static_cast<Eigen::Index>(r), c)));
    scores.rows.push_back(std::move(row));
  }

  data::CsvTable loadings;
  loadings.header = {"component"};
  for (const auto& n : t.base_names) loadings.header.push_back(n);
  data::CsvTable ratios;
  ratios.header = {"component", "explained_variance_ratio", "singular_value"};
  for (Eigen::Index k = 0; k < m.components.rows(); ++k) {
    std::vector<std::string> row{"PCA_" + std::to_string(k)};
    for (Eigen::Index j = 0; j < m.components.cols(); ++j) row.push_back(data::format_double(m.components(k, j)));
    loadings.rows.push_back(std::move(row));
    ratios.rows.push_back({"PCA_" + std::to_string(k), data::format_double(m.explained_variance_ratio(k)),
                           data::format_double(m.singular_values(k))});
  }

  nlohmann::ordered_json model;
  model["targets"] = t.base_names;
  model["n_samples"] = m.n_samples;
  model["column_means"] = std::vector<double>(m.column_means.data(), m.column_means.data() + m.column_means.size());
  model["explained_variance_ratio"] =
      std::vector<double>(m.explained_variance_ratio.data(), m.explained_variance_ratio.data() + m.explained_variance_ratio.size());
  model["singular_values"] = std::vector<double>(m.singular_values.data(), m.singular_values.data() + m.singular_values.size());
  auto& comps = model["components"] = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < m.components.rows(); ++k) {
    std::vector<double> row(static_cast<std::size_t>(m.components.cols()));
    for (Eigen::Index j = 0; j < m.components.cols(); ++j) row[static_cast<std::size_t>(j)] = m.components(k, j);
    comps.push_back(row);
  }
  model["fitted_on"] = "all compounds with every membrane measured";

  std::vector<std::string> classes;
  const auto color_column = get_string(cfg, "pca.color_column", "charge_class");
  const auto props = load_properties(cfg);
  const auto col = std::find(props.names.begin(), props.names.end(), color_column);
  if (input_path(cfg, "data.properties") && col != props.names.end()) {
    // The numeric reader drops text; read the class column as strings instead.
    const auto csv = data::read_csv(*input_path(cfg, "data.properties"));
    const auto id = csv.require_column("compound_id", "data.properties");
    const auto cc = csv.require_column(color_column, "data.properties");
    std::map<std::string, std::string> by_id;
    for (const auto& row : csv.rows) by_id[row[id]] = row[cc];
    for (auto r : t.pca_rows) {
      const auto it = by_id.find(t.ids[r]);
      classes.push_back(it == by_id.end() || it->second.empty() ? "unknown" : it->second);
    }
  }

  write_output(cfg, report, "pca_scores.csv", csv_text(scores));
  write_output(cfg, report, "pca_loadings.csv", csv_text(loadings));
  write_output(cfg, report, "pca_ratios.csv", csv_text(ratios));
  write_output(cfg, report, "pca_model.json", model.dump(1));
  write_output(cfg, report, "pca_scatter.svg", pca_scatter_svg(t, classes));
}

// ---- assay ----

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

void run_assay(const RunConfig& cfg, Report& report) {
  const auto path = input_path(cfg, "data.raw") ? require_input(cfg, "data.raw") : require_input(cfg, "data.measurements");
  const auto text = data::read_text(path);
  data::MeasurementTable table;
  if (!blank(text)) {
    const auto csv = data::parse_csv(text, path.string());
    if (is_raw_concentration_csv(csv)) table = measurements_from_raw(csv, geometry(cfg), path.string());
    else table = data::parse_measurements(csv, path.string());
  }
  write_output(cfg, report, "measurements.csv", csv_text(data::measurements_to_csv(table)));
  write_output(cfg, report, "measurements_mean.csv", csv_text(data::measurements_to_csv(data::average_repeats(table))));
}

// ---- design ----

void run_design(const RunConfig& cfg, Report& report) {
  const auto path = require_input(cfg, "design.pool");
  const auto rep = data::parse_representation(get_string(cfg, "design.representation", "percepta"));
  const auto pool = data::load_descriptors(path, rep);
  const auto stats = data::fit_normalization(pool.values, pool.feature_names, {}, data::ZeroVariance::Center);
  const Eigen::MatrixXd x = data::apply_normalization(stats, pool.values);
  const auto seed = static_cast<std::uint64_t>(get_int(cfg, "design.seed", static_cast<long long>(cfg.seed)));
  const auto method = get_string(cfg, "design.method", "doptimal");
  const auto k = get_int(cfg, "design.k", 0);
  if (k < 1) throw Error(ErrorKind::ConfigError, "design.k must be a positive integer");

  if (method == "forward") {
    const auto target = get_string(cfg, "design.target", "");
    const auto t = load_targets(cfg);
    const auto names = t.names();
    const auto col = std::find(names.begin(), names.end(), target);
    if (col == names.end()) throw Error(ErrorKind::ConfigError, "design.target: unknown target '" + target + "'");
    const Eigen::MatrixXd all = t.all();
    std::vector<Eigen::Index> rows;
    std::vector<double> y;
    for (std::size_t i = 0; i < pool.ids.size(); ++i) {
      const auto it = std::find(t.ids.begin(), t.ids.end(), pool.ids[i]);
      if (it == t.ids.end()) continue;
      const double v = all(it - t.ids.begin(), col - names.begin());
      if (std::isnan(v)) continue;
      rows.push_back(static_cast<Eigen::Index>(i));
      y.push_back(v);
    }
    design::ForwardOptions opt;
    opt.seed = seed;
    const auto r = design::forward_feature_select(x(rows, Eigen::all), Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())),
                                                  design::parse_family(get_string(cfg, "design.family", "lasso")),
                                                  static_cast<int>(k), opt);
    data::CsvTable out;
    out.header = {"rank", "feature", "cv_r2"};
    for (std::size_t i = 0; i < r.features.size(); ++i)
      out.rows.push_back({std::to_string(i + 1), pool.feature_names[static_cast<std::size_t>(r.features[i])],
                          data::format_double(r.scores[i])});
    write_output(cfg, report, "design_features.csv", csv_text(out));
    return;
  }
  if (method != "doptimal") throw Error(ErrorKind::ConfigError, "design.method must be doptimal or forward");

  std::vector<int> owned;
  for (const auto& id : get_strings(cfg, "design.owned").value_or(std::vector<std::string>{})) {
    const auto row = pool.row_of(id);
    if (!row) throw Error(ErrorKind::ConfigError, "design.owned: '" + id + "' is not in the pool");
    owned.push_back(static_cast<int>(*row));
  }
  const auto r = design::d_optimal_select(x, static_cast<int>(k), owned, seed);
  data::CsvTable out;
  out.header = {"rank", "compound_id", "log_det"};
  for (std::size_t i = 0; i < r.chosen.size(); ++i)
    out.rows.push_back({std::to_string(i + 1), pool.ids[static_cast<std::size_t>(r.chosen[i])],
                        data::format_double(r.log_det[i + 1])});
  write_output(cfg, report, "design_chosen.csv", csv_text(out));
}

// ---- desalt ----

void run_desalt(const RunConfig& cfg, Report& report) {
  const auto in = load_smiles(cfg);
  const auto d = desalt_all(in, salt_list(cfg));
  data::CsvTable out;
  out.header = {"compound_id", "smiles", "desalted", "error"};
  for (std::size_t i = 0; i < in.ids.size(); ++i) {
    out.rows.push_back({in.ids[i], in.smiles[i], d.desalted[i], d.errors[i]});
    if (!d.errors[i].empty()) report.warnings.push_back("desalt: " + in.ids[i] + ": " + d.errors[i]);
  }
  write_output(cfg, report, "desalted.csv", csv_text(out));
}

}  // namespace

void validate(const RunConfig& cfg) {
  try {
    sweep_spec(cfg);
    geometry(cfg);
    for (const char* key : {"data.measurements", "data.raw", "data.smiles", "data.properties", "data.folds",
                            "desalt.salts", "design.pool", "select.trials", "test.selection"})
      if (input_path(cfg, key)) require_input(cfg, key);
    if (const auto* reps = find(cfg.doc, "data.representations")) {
      if (!reps->is_object()) throw Error(ErrorKind::ConfigError, "data.representations must be a table");
      for (const auto& [name, v] : reps->items()) {
        data::parse_representation(name);
        std::string p;
        if (v.is_string()) p = v.get<std::string>();
        else if (v.is_object() && v.contains("path") && v["path"].is_string()) p = v["path"].get<std::string>();
        else throw Error(ErrorKind::ConfigError, "data.representations." + name + " must be a path or {path = ...}");
        const fs::path full = fs::path(p).is_absolute() ? fs::path(p) : cfg.base_dir / p;
        if (!fs::exists(full))
          throw Error(ErrorKind::ConfigError, "data.representations." + name + ": file not found: " + full.string());
      }
    }
    get_number(cfg, "select.threshold", kDefaultThreshold);
    const auto scope = get_string(cfg, "select.test", "best");
    if (scope != "best" && scope != "tuned") throw Error(ErrorKind::ConfigError, "select.test must be best or tuned");
    get_int(cfg, "sweep.repeats", 0);
    get_strings(cfg, "sweep.targets");
    get_strings(cfg, "sweep.multitask_targets");
    get_strings(cfg, "sweep.representations");
    profile_membranes(cfg);
    get_int(cfg, "profiles.k", 10);
    const auto sm = get_string(cfg, "scaffolds.mode", "murcko");
    if (sm != "murcko" && sm != "generic") throw Error(ErrorKind::ConfigError, "scaffolds.mode must be murcko or generic");
    const auto method = get_string(cfg, "design.method", "doptimal");
    if (method != "doptimal" && method != "forward")
      throw Error(ErrorKind::ConfigError, "design.method must be doptimal or forward");
    design::parse_family(get_string(cfg, "design.family", "lasso"));
    data::parse_representation(get_string(cfg, "design.representation", "percepta"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  }
}

Report cmd_assay(const RunConfig& cfg) {
  Report r;
  run_assay(cfg, r);
  return r;
}

Report cmd_desalt(const RunConfig& cfg) {
  Report r;
  run_desalt(cfg, r);
  return r;
}

Report cmd_pca(const RunConfig& cfg) {
  Report r;
  run_pca(cfg, load_targets(cfg), r);
  return r;
}

Report cmd_sweep(const RunConfig& cfg) {
  Report r;
  const auto in = load_inputs(cfg);
  for (const auto& w : in.warnings) r.warnings.push_back(w);
  const auto s = run_sweep(cfg, in, r);
  write_sweep(cfg, s, r);
  if (r.cells > 0 && r.failed_cells == r.cells) throw Error(ErrorKind::AllTrialsFailed, "every sweep cell failed");
  return r;
}

Report cmd_select(const RunConfig& cfg) {
  Report r;
  write_selection(cfg, tune_all(read_trials(cfg), r), r);
  return r;
}

Report cmd_test(const RunConfig& cfg) {
  Report r;
  const auto tuned = read_selections(cfg);
  const auto in = load_inputs(cfg);
  run_test(cfg, in, tuned, r);
  return r;
}

Report cmd_importance(const RunConfig& cfg) {
  Report r;
  const auto tuned = read_selections(cfg);
  run_importance(cfg, load_inputs(cfg), tuned, r);
  return r;
}

Report cmd_profiles(const RunConfig& cfg) {
  Report r;
  run_profiles(cfg, load_targets(cfg), r);
  return r;
}

Report cmd_scaffolds(const RunConfig& cfg) {
  Report r;
  run_scaffolds(cfg, r);
  return r;
}

Report cmd_design(const RunConfig& cfg) {
  Report r;
  run_design(cfg, r);
  return r;
}

Report cmd_pipeline(const RunConfig& cfg) {
  Report r;
  if (!synth_mode(cfg) && input_path(cfg, "data.measurements")) run_assay(cfg, r);
  const auto in = load_inputs(cfg);
  for (const auto& w : in.warnings) r.warnings.push_back(w);
  run_pca(cfg, in.targets, r);

  Report sweep;
  const auto s = run_sweep(cfg, in, sweep);
  write_sweep(cfg, s, sweep);
  const bool total = sweep.cells > 0 && sweep.failed_cells == sweep.cells;
  merge(r, std::move(sweep));
  if (total) throw Error(ErrorKind::AllTrialsFailed, "every sweep cell failed");

  const auto tuned = tune_all(s.trials, r);
  write_selection(cfg, tuned, r);
  run_test(cfg, in, tuned, r);

  // Reports are best effort: a failure is recorded and the remaining steps still run.
  auto optional_step = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      r.failures.push_back(std::string(name) + ": " + e.what());
    }
  };
  optional_step("importance", [&] { run_importance(cfg, in, tuned, r); });
  if (in.targets.base.cols() == static_cast<Eigen::Index>(kMembraneCount))
    optional_step("profiles", [&] { run_profiles(cfg, in.targets, r); });
  if (input_path(cfg, "data.smiles")) optional_step("scaffolds", [&] { run_scaffolds(cfg, r); });
  return r;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::IoError, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void write_manifest(const RunConfig& cfg, std::string_view command, Report& report) {
  auto hashed = cfg.doc;
  hashed.erase("out");
  hashed.erase("workers");
  nlohmann::ordered_json m;
  m["command"] = command;
  m["version"] = QSPR_VERSION;
  m["seed"] = cfg.seed;
  m["config_sha256"] = sha256_hex(hashed.dump());
  auto files = report.files;
  std::sort(files.begin(), files.end());
  auto& list = m["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    const auto text = data::read_text(cfg.out_dir / f);
    list.push_back({{"path", f.generic_string()}, {"sha256", sha256_hex(text)}, {"bytes", text.size()}});
  }
  m["failures"] = report.failures;
  m["warnings"] = report.warnings;
  fs::create_directories(cfg.out_dir);
  data::write_text(cfg.out_dir / "manifest.json", m.dump(1) + "\n");
}

}  // namespace qspr::workflow
