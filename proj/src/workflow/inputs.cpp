#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>

#include "internal.hpp"
#include "qspr/config.hpp"
#include "qspr/data/synth.hpp"
#include "qspr/error.hpp"

namespace qspr::workflow {

using detail::Json;
namespace fs = std::filesystem;

RunConfig load_run_config(const std::optional<fs::path>& path, const std::optional<fs::path>& out) {
  RunConfig cfg;
  if (path) {
    if (!fs::exists(*path)) throw Error(ErrorKind::ConfigError, "config file not found: " + path->string());
    cfg.doc = config::load_toml(*path);
    cfg.base_dir = path->parent_path().empty() ? fs::path(".") : path->parent_path();
  }
  if (const auto* s = detail::find(cfg.doc, "seed")) {
    if (s->is_number_unsigned()) cfg.seed = s->get<std::uint64_t>();
    else if (s->is_number_integer() && s->get<long long>() >= 0) cfg.seed = static_cast<std::uint64_t>(s->get<long long>());
    else throw Error(ErrorKind::ConfigError, "seed must be a non-negative integer");
  }
  if (const auto* w = detail::find(cfg.doc, "workers")) {
    if (!w->is_number_integer() || w->get<long long>() < 1)
      throw Error(ErrorKind::ConfigError, "workers must be a positive integer");
    cfg.workers = static_cast<int>(w->get<long long>());
  }
  if (out) {
    cfg.out_dir = *out;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    cfg.out_dir = env;
  } else if (const auto* o = detail::find(cfg.doc, "out")) {
    if (!o->is_string()) throw Error(ErrorKind::ConfigError, "out must be a string");
    cfg.out_dir = cfg.base_dir / o->get<std::string>();
  }
  return cfg;
}

namespace detail {

const Json* find(const Json& doc, std::string_view dotted) {
  const Json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!cur->is_object()) return nullptr;
    const auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string_view::npos) return cur;
    start = dot + 1;
  }
}

namespace {

[[noreturn]] void type_error(std::string_view key, std::string_view what) {
  throw Error(ErrorKind::ConfigError, std::string(key) + " must be " + std::string(what));
}

}  // namespace

std::string get_string(const RunConfig& cfg, std::string_view key, const std::string& fallback) {
  const auto* v = find(cfg.doc, key);
  if (!v) return fallback;
  if (!v->is_string()) type_error(key, "a string");
  return v->get<std::string>();
}

double get_number(const RunConfig& cfg, std::string_view key, double fallback) {
  const auto* v = find(cfg.doc, key);
  if (!v) return fallback;
  if (!v->is_number()) type_error(key, "a number");
  return v->get<double>();
}

long long get_int(const RunConfig& cfg, std::string_view key, long long fallback) {
  const auto* v = find(cfg.doc, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) type_error(key, "an integer");
  return v->get<long long>();
}

bool get_bool(const RunConfig& cfg, std::string_view key, bool fallback) {
  const auto* v = find(cfg.doc, key);
  if (!v) return fallback;
  if (!v->is_boolean()) type_error(key, "true or false");
  return v->get<bool>();
}

std::optional<std::vector<std::string>> get_strings(const RunConfig& cfg, std::string_view key) {
  const auto* v = find(cfg.doc, key);
  if (!v) return std::nullopt;
  if (v->is_string()) return std::vector<std::string>{v->get<std::string>()};
  if (!v->is_array()) type_error(key, "a list of strings");
  std::vector<std::string> out;
  for (const auto& e : *v) {
    if (!e.is_string()) type_error(key, "a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::optional<fs::path> input_path(const RunConfig& cfg, std::string_view key) {
  const auto* v = find(cfg.doc, key);
  if (!v) return std::nullopt;
  if (!v->is_string()) type_error(key, "a path string");
  fs::path p = v->get<std::string>();
  return p.is_absolute() ? p : cfg.base_dir / p;
}

fs::path require_input(const RunConfig& cfg, std::string_view key) {
  auto p = input_path(cfg, key);
  if (!p) throw Error(ErrorKind::ConfigError, "missing required setting " + std::string(key));
  if (!fs::exists(*p)) throw Error(ErrorKind::ConfigError, std::string(key) + ": file not found: " + p->string());
  return *p;
}

assay::AssayGeometry geometry(const RunConfig& cfg) {
  assay::AssayGeometry g;
  g.filter_area = get_number(cfg, "assay.filter_area", g.filter_area);
  g.donor_volume = get_number(cfg, "assay.donor_volume", g.donor_volume);
  g.acceptor_volume = get_number(cfg, "assay.acceptor_volume", g.acceptor_volume);
  g.incubation_time = get_number(cfg, "assay.incubation_time", g.incubation_time);
  g.steady_state_lag = get_number(cfg, "assay.steady_state_lag", g.steady_state_lag);
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string("assay geometry: ") + e.what());
  }
  return g;
}

bool is_raw_concentration_csv(const data::CsvTable& csv) {
  return std::any_of(csv.header.begin(), csv.header.end(), [](const std::string& h) { return h.ends_with("_CD0"); });
}

data::MeasurementTable measurements_from_raw(const data::CsvTable& csv, const assay::AssayGeometry& g,
                                             std::string_view source) {
  const std::string src(source);
  const auto id_col = csv.column("compound_id");
  const auto plate_col = csv.column("plate_number");
  if (!id_col || !plate_col)
    throw Error(ErrorKind::SchemaError, src + ": raw concentration table needs compound_id and plate_number columns");
  struct Cols {
    std::size_t cd0, cdt, cat;
  };
  std::array<std::optional<Cols>, kMembraneCount> cols;
  for (Membrane m : kAllMembranes) {
    const std::string p(membrane_name(m));
    const auto a = csv.column(p + "_CD0"), b = csv.column(p + "_CDt"), c = csv.column(p + "_CAt");
    if (!a && !b && !c) continue;
    if (!a || !b || !c)
      throw Error(ErrorKind::SchemaError, src + ": membrane " + p + " needs all of " + p + "_CD0, " + p + "_CDt, " + p +
                                              "_CAt");
    cols[static_cast<std::size_t>(m)] = Cols{*a, *b, *c};
  }

  data::MeasurementTable table;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = r + 2;
    const std::string where = src + ": row " + std::to_string(line);
    if (row.size() != csv.header.size())
      throw Error(ErrorKind::ParseError, where + " has " + std::to_string(row.size()) + " fields, expected " +
                                             std::to_string(csv.header.size()));
    assay::PlateRecord rec;
    rec.compound_id = row[*id_col];
    if (rec.compound_id.empty()) throw Error(ErrorKind::ParseError, where + ": empty compound id");
    const auto plate = data::parse_number(row[*plate_col], source, line, "plate_number");
    rec.plate_number = plate ? static_cast<int>(*plate) : 0;
    for (Membrane m : kAllMembranes) {
      const auto mi = static_cast<std::size_t>(m);
      if (!cols[mi]) continue;
      const auto cd0 = data::parse_number(row[cols[mi]->cd0], source, line, csv.header[cols[mi]->cd0]);
      const auto cdt = data::parse_number(row[cols[mi]->cdt], source, line, csv.header[cols[mi]->cdt]);
      const auto cat = data::parse_number(row[cols[mi]->cat], source, line, csv.header[cols[mi]->cat]);
      if (!cd0 || !cdt || !cat) continue;
      try {
        const auto res = assay::evaluate_well({*cd0, *cdt, *cat}, g);
        rec.mr[mi] = res.membrane_retention;
        rec.pe[mi] = res.effective_permeability;
        rec.log_pe[mi] = res.log_pe;
      } catch (const Error& e) {
        throw Error(ErrorKind::ParseError, where + ", membrane " + std::string(membrane_name(m)) + ": " + e.what());
      }
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

data::MeasurementTable load_measurement_table(const fs::path& path, const assay::AssayGeometry& g) {
  const auto csv = data::read_csv(path);
  if (is_raw_concentration_csv(csv)) return measurements_from_raw(csv, g, path.string());
  return data::parse_measurements(csv, path.string());
}

std::vector<std::string> Targets::names() const {
  auto out = base_names;
  if (pca)
    for (std::size_t i = 0; i < kPcaTargets; ++i) out.push_back("PCA_" + std::to_string(i));
  return out;
}

Eigen::MatrixXd Targets::all() const {
  if (!pca) return base;
  Eigen::MatrixXd out(base.rows(), base.cols() + pca_scores.cols());
  out << base, pca_scores;
  return out;
}

bool synth_mode(const RunConfig& cfg) {
  return find(cfg.doc, "synth") != nullptr && !find(cfg.doc, "data.measurements");
}

namespace {

data::SynthDataset make_synth(const RunConfig& cfg) {
  const auto n = get_int(cfg, "synth.n", 143);
  const auto d = get_int(cfg, "synth.features", 38);
  const auto t = get_int(cfg, "synth.targets", static_cast<long long>(kMembraneCount));
  if (n < 5 || d < 1 || t < 1) throw Error(ErrorKind::ConfigError, "synth: n >= 5, features >= 1, targets >= 1 required");
  const auto seed = static_cast<std::uint64_t>(get_int(cfg, "synth.seed", static_cast<long long>(cfg.seed)));
  auto s = data::synth_dataset(seed, static_cast<std::size_t>(n), static_cast<std::size_t>(d),
                               static_cast<std::size_t>(t), get_number(cfg, "synth.noise", 0.1),
                               get_number(cfg, "synth.shared", 0.8));
  if (t == static_cast<long long>(kMembraneCount))
    for (Membrane m : kAllMembranes) s.target_names[static_cast<std::size_t>(m)] = std::string(membrane_name(m));
  return s;
}

void fit_pca_targets(Targets& t) {
  if (t.base.cols() < static_cast<Eigen::Index>(kPcaTargets)) return;
  const auto complete = pca::drop_incomplete_rows(t.base);
  if (complete.kept.size() < 2) {
    t.warnings.push_back("PCA targets skipped: fewer than two compounds have every membrane");
    return;
  }
  t.pca = pca::pca_fit(complete.matrix, kPcaTargets);
  t.pca_rows = complete.kept;
  t.pca_scores = Eigen::MatrixXd::Constant(t.base.rows(), kPcaTargets, std::numeric_limits<double>::quiet_NaN());
  const Eigen::MatrixXd scores = pca::pca_transform(*t.pca, complete.matrix);
  for (std::size_t i = 0; i < complete.kept.size(); ++i)
    t.pca_scores.row(static_cast<Eigen::Index>(complete.kept[i])) = scores.row(static_cast<Eigen::Index>(i));
  if (!complete.dropped.empty())
    t.warnings.push_back("PCA fitted on " + std::to_string(complete.kept.size()) + " complete compounds; " +
                         std::to_string(complete.dropped.size()) + " with missing membranes have no PCA targets");
}

}  // namespace

Targets load_targets(const RunConfig& cfg) {
  Targets t;
  if (synth_mode(cfg)) {
    const auto s = make_synth(cfg);
    t.ids = s.table.ids;
    t.base_names = s.target_names;
    t.base = s.targets;
  } else {
    const auto table = data::average_repeats(load_measurement_table(require_input(cfg, "data.measurements"), geometry(cfg)));
    t.ids = table.compound_ids();
    for (Membrane m : kAllMembranes) t.base_names.emplace_back(membrane_name(m));
    t.base = data::log_pe_matrix(table, t.ids);
  }
  fit_pca_targets(t);
  return t;
}

namespace {

struct RepresentationSource {
  std::string name;
  fs::path path;
  bool preprocess = false;
};

std::vector<RepresentationSource> representation_sources(const RunConfig& cfg) {
  std::vector<RepresentationSource> out;
  const auto* reps = find(cfg.doc, "data.representations");
  if (!reps) return out;
  if (!reps->is_object()) throw Error(ErrorKind::ConfigError, "data.representations must be a table");
  for (const auto& [name, v] : reps->items()) {
    data::parse_representation(name);  // validates the name
    RepresentationSource src{name, {}, false};
    std::string p;
    if (v.is_string()) {
      p = v.get<std::string>();
    } else if (v.is_object() && v.contains("path") && v["path"].is_string()) {
      p = v["path"].get<std::string>();
      if (v.contains("preprocess")) {
        if (!v["preprocess"].is_boolean())
          throw Error(ErrorKind::ConfigError, "data.representations." + name + ".preprocess must be true or false");
        src.preprocess = v["preprocess"].get<bool>();
      }
    } else {
      throw Error(ErrorKind::ConfigError, "data.representations." + name + " must be a path or {path = ...}");
    }
    src.path = fs::path(p).is_absolute() ? fs::path(p) : cfg.base_dir / p;
    if (!fs::exists(src.path))
      throw Error(ErrorKind::ConfigError, "data.representations." + name + ": file not found: " + src.path.string());
    out.push_back(std::move(src));
  }
  return out;
}

data::FoldAssignment load_fold_file(const fs::path& path) {
  const auto csv = data::read_csv(path);
  const auto src = path.string();
  const auto id = csv.require_column("compound_id", src);
  const auto fold = csv.require_column("fold", src);
  data::FoldAssignment f;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto v = data::parse_number(csv.rows[r][fold], src, r + 2, "fold");
    if (!v || *v < 0 || *v > 4 || std::floor(*v) != *v)
      throw Error(ErrorKind::ParseError, src + ": row " + std::to_string(r + 2) + ": fold must be 0..4");
    f.ids.push_back(csv.rows[r][id]);
    f.folds.push_back(static_cast<int>(*v));
  }
  return f;
}

bool covers(const data::FoldAssignment& f, const std::vector<std::string>& ids) {
  std::set<std::string> have(f.ids.begin(), f.ids.end());
  return std::all_of(ids.begin(), ids.end(), [&](const std::string& id) { return have.count(id) > 0; });
}

}  // namespace

tuning::Dataset with_targets(const tuning::Dataset& d, const std::vector<std::string>& names) {
  tuning::Dataset out = d;
  out.target_names = names;
  out.y.resize(d.y.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto it = std::find(d.target_names.begin(), d.target_names.end(), names[j]);
    if (it == d.target_names.end()) throw Error(ErrorKind::ConfigError, "unknown target " + names[j]);
    out.y.col(static_cast<Eigen::Index>(j)) = d.y.col(it - d.target_names.begin());
  }
  return out;
}

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  in.targets = load_targets(cfg);
  const auto& t = in.targets;
  in.warnings = t.warnings;
  const auto names = t.names();
  const Eigen::MatrixXd y_all = t.all();

  std::optional<data::FoldAssignment> table_folds;
  if (synth_mode(cfg)) {
    const auto s = make_synth(cfg);
    tuning::Dataset d;
    d.representation = "synth";
    d.ids = t.ids;
    d.x = s.table.values;
    d.feature_names = s.table.feature_names;
    d.y = y_all;
    d.target_names = names;
    in.datasets.push_back(std::move(d));
  } else {
    const bool strict_width = get_bool(cfg, "data.check_width", true);
    data::FoldAssignment combined;
    bool all_have_folds = true;
    for (const auto& src : representation_sources(cfg)) {
      const auto rep = data::parse_representation(src.name);
      data::DescriptorTable table;
      if (src.preprocess) {
        if (rep != data::Representation::Percepta)
          throw Error(ErrorKind::ConfigError, "preprocess applies to the percepta representation only");
        table = data::preprocess_percepta(data::read_csv(src.path), {}, src.path.string());
      } else {
        table = data::load_descriptors(src.path, rep);
      }
      if (strict_width) data::check_width(table);
      for (std::size_t i = 0; i < table.ids.size(); ++i) {
        if (table.folds[i] < 0) {
          all_have_folds = false;
          continue;
        }
        if (auto f = combined.fold_of(table.ids[i])) {
          if (*f != table.folds[i])
            throw Error(ErrorKind::SchemaError, src.path.string() + ": fold of " + table.ids[i] +
                                                    " disagrees with another representation");
        } else {
          combined.ids.push_back(table.ids[i]);
          combined.folds.push_back(table.folds[i]);
        }
      }
      std::vector<std::string> ids;
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < t.ids.size(); ++i)
        if (table.row_of(t.ids[i])) {
          ids.push_back(t.ids[i]);
          rows.push_back(static_cast<Eigen::Index>(i));
        }
      if (ids.size() < t.ids.size())
        in.warnings.push_back(src.name + ": " + std::to_string(t.ids.size() - ids.size()) +
                              " measured compounds have no descriptors");
      const auto sub = data::select_rows(table, ids);
      tuning::Dataset d;
      d.representation = src.name;
      d.ids = ids;
      d.x = sub.values;
      d.feature_names = sub.feature_names;
      d.y = y_all(rows, Eigen::all);
      d.target_names = names;
      in.datasets.push_back(std::move(d));
    }
    if (all_have_folds && !combined.ids.empty()) table_folds = combined;
  }

  in.plan.seed = cfg.seed;
  in.plan.repeats_override = static_cast<int>(get_int(cfg, "sweep.repeats", 0));
  std::set<std::string> needed;
  for (const auto& d : in.datasets) needed.insert(d.ids.begin(), d.ids.end());
  const std::vector<std::string> needed_ids(needed.begin(), needed.end());
  if (auto p = input_path(cfg, "data.folds")) {
    if (!fs::exists(*p)) throw Error(ErrorKind::ConfigError, "data.folds: file not found: " + p->string());
    in.plan.folds = load_fold_file(*p);
    if (!covers(in.plan.folds, needed_ids)) throw Error(ErrorKind::SchemaError, p->string() + ": not every compound has a fold");
  } else if (table_folds && covers(*table_folds, needed_ids)) {
    in.plan.folds = *table_folds;
  } else {
    const auto fold_seed = static_cast<std::uint64_t>(get_int(cfg, "data.fold_seed", static_cast<long long>(cfg.seed)));
    // Measurement order, so the split does not depend on which representations are loaded.
    std::vector<std::string> ids;
    for (const auto& id : t.ids)
      if (needed.count(id)) ids.push_back(id);
    in.plan.folds = tuning::split_folds(ids, fold_seed);
  }
  return in;
}

void write_output(const RunConfig& cfg, Report& report, const fs::path& name, std::string_view text) {
  fs::create_directories(cfg.out_dir / name.parent_path());
  data::write_text(cfg.out_dir / name, text);
  if (std::find(report.files.begin(), report.files.end(), name) == report.files.end()) report.files.push_back(name);
}

}  // namespace detail
}  // namespace qspr::workflow
