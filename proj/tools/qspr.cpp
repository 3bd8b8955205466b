// qspr: command-line front end for the PAMPA QSPR workflow.

#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qspr/error.hpp"
#include "qspr/workflow.hpp"

namespace fs = std::filesystem;
using qspr::workflow::Report;
using qspr::workflow::RunConfig;
using Json = nlohmann::ordered_json;

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

void set_dotted(Json& doc, const std::string& dotted, const Json& value) {
  Json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    if (!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = Json::object();
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

bool usage_error(qspr::ErrorKind k) {
  using qspr::ErrorKind;
  return k == ErrorKind::ConfigError || k == ErrorKind::SchemaError || k == ErrorKind::ParseError ||
         k == ErrorKind::IoError || k == ErrorKind::WidthMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAMPA permeability QSPR workflow"};
  app.require_subcommand(1);
  Overrides ov;
  app.add_option("-c,--config", ov.config, "TOML run configuration")->check(CLI::ExistingFile);
  app.add_option("-o,--out", ov.out, "Output directory (overrides QSPR_OUT_DIR and the config)");
  app.add_option("-w,--workers", ov.workers, "Concurrent trials")->check(CLI::PositiveNumber);
  app.add_option("--seed", ov.seed, "Global seed");

  // Subcommand flags, each bound to the config key it overrides.
  enum class Kind { Path, Text, Number, Integer, List };
  struct Flag {
    std::string key;
    Kind kind;
    std::optional<std::string> text;
    std::optional<double> number;
    std::optional<long long> integer;
  };
  std::deque<Flag> flags;
  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, Kind kind, const std::string& help) {
    auto& f = flags.emplace_back(Flag{key, kind, {}, {}, {}});
    if (kind == Kind::Number) sub->add_option(name, f.number, help);
    else if (kind == Kind::Integer) sub->add_option(name, f.integer, help);
    else if (kind == Kind::Path) sub->add_option(name, f.text, help)->check(CLI::ExistingFile);
    else sub->add_option(name, f.text, help);
  };

  std::map<std::string, std::function<Report(const RunConfig&)>> commands{
      {"assay", qspr::workflow::cmd_assay},         {"desalt", qspr::workflow::cmd_desalt},
      {"pca", qspr::workflow::cmd_pca},             {"sweep", qspr::workflow::cmd_sweep},
      {"select", qspr::workflow::cmd_select},       {"test", qspr::workflow::cmd_test},
      {"importance", qspr::workflow::cmd_importance}, {"profiles", qspr::workflow::cmd_profiles},
      {"scaffolds", qspr::workflow::cmd_scaffolds}, {"design", qspr::workflow::cmd_design},
      {"pipeline", qspr::workflow::cmd_pipeline},
  };

  auto* assay = app.add_subcommand("assay", "Membrane retention and permeability from plate data");
  flag(assay, "-i,--input", "data.raw", Kind::Path, "Raw concentration or measurement CSV");
  auto* desalt = app.add_subcommand("desalt", "Strip counter-ions and neutralize SMILES");
  flag(desalt, "-i,--input", "data.smiles", Kind::Path, "CSV with compound_id and smiles columns");
  flag(desalt, "--salts", "desalt.salts", Kind::Path, "Salt list, one SMILES per line");
  auto* pca = app.add_subcommand("pca", "PCA of the mean logPe matrix");
  flag(pca, "-i,--input", "data.measurements", Kind::Path, "Measurement CSV");
  auto* sweep = app.add_subcommand("sweep", "Grid search over representations, classes and modes");
  flag(sweep, "--classes", "sweep.classes", Kind::List, "Comma-separated model classes");
  flag(sweep, "--repeats", "sweep.repeats", Kind::Integer, "Repeats per fold for every class");
  auto* select = app.add_subcommand("select", "Tuned model per target from sweep trials");
  flag(select, "--trials", "select.trials", Kind::Path, "trials.json from sweep");
  auto* test = app.add_subcommand("test", "Retrain selected models and score the test fold");
  flag(test, "--selection", "test.selection", Kind::Path, "selection.json from select");
  flag(test, "--threshold", "select.threshold", Kind::Number, "Validation R2 threshold");
  auto* importance = app.add_subcommand("importance", "Elastic-net coefficient heatmap");
  flag(importance, "--selection", "test.selection", Kind::Path, "selection.json from select");
  auto* profiles = app.add_subcommand("profiles", "Top and bottom penetrating compounds per membrane");
  flag(profiles, "-i,--input", "data.measurements", Kind::Path, "Measurement CSV");
  flag(profiles, "--properties", "data.properties", Kind::Path, "Property CSV keyed by compound_id");
  flag(profiles, "--k", "profiles.k", Kind::Integer, "Set size");
  auto* scaffolds = app.add_subcommand("scaffolds", "Generic Murcko scaffold report");
  flag(scaffolds, "-i,--input", "data.smiles", Kind::Path, "CSV with compound_id and smiles columns");
  flag(scaffolds, "--mode", "scaffolds.mode", Kind::Text, "murcko or generic");
  auto* design = app.add_subcommand("design", "D-optimal compound or forward feature selection");
  flag(design, "--pool", "design.pool", Kind::Path, "Candidate descriptor CSV");
  flag(design, "--k", "design.k", Kind::Integer, "Number of picks");
  flag(design, "--owned", "design.owned", Kind::List, "Comma-separated ids already owned");
  flag(design, "--method", "design.method", Kind::Text, "doptimal or forward");
  flag(design, "--target", "design.target", Kind::Text, "Target for forward selection");
  flag(design, "--family", "design.family", Kind::Text, "OLS, lasso, ridge or PLS");
  app.add_subcommand("pipeline", "Every stage from measurements to reports");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = qspr::workflow::load_run_config(
        ov.config ? std::optional<fs::path>(*ov.config) : std::nullopt,
        ov.out ? std::optional<fs::path>(*ov.out) : std::nullopt);
    if (ov.workers) cfg.workers = *ov.workers;
    if (ov.seed) {
      cfg.seed = *ov.seed;
      cfg.doc["seed"] = *ov.seed;
    }
    for (const auto& f : flags) {
      if (f.kind == Kind::Number && f.number) set_dotted(cfg.doc, f.key, *f.number);
      if (f.kind == Kind::Integer && f.integer) set_dotted(cfg.doc, f.key, *f.integer);
      if (!f.text) continue;
      if (f.kind == Kind::Path) set_dotted(cfg.doc, f.key, fs::absolute(*f.text).string());
      else if (f.kind == Kind::List) set_dotted(cfg.doc, f.key, split_list(*f.text));
      else set_dotted(cfg.doc, f.key, *f.text);
    }
    // An explicit assay input replaces whatever the config names.
    if (command == "assay" && cfg.doc.contains("data") && flags.front().text) cfg.doc["data"].erase("measurements");

    qspr::workflow::validate(cfg);
    Report report = commands.at(command)(cfg);
    qspr::workflow::write_manifest(cfg, command, report);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : report.failures) std::cerr << "failed: " << f << "\n";
    std::cerr << command << ": wrote " << report.files.size() + 1 << " files to " << cfg.out_dir.string() << "\n";
    return 0;
  } catch (const qspr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage_error(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
