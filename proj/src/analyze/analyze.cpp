#include "qspr/analyze/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "qspr/chem/scaffold.hpp"
#include "qspr/chem/smiles.hpp"
#include "qspr/data/csv.hpp"
#include "qspr/error.hpp"
#include "qspr/models/linear.hpp"

namespace qspr::analyze {
namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Diverging blue-white-red for v in [-1, 1].
std::string diverging(double v) {
  v = std::clamp(v, -1.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(v))));
  char buf[16];
  if (v >= 0)
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
  else
    std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
  return buf;
}

std::string svg_open(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", w) + "\" height=\"" + fmt("%.0f", h) +
         "\" viewBox=\"0 0 " + fmt("%.0f", w) + " " + fmt("%.0f", h) +
         "\">\n<style>text{font-family:sans-serif;font-size:10px}.title{font-size:13px;font-weight:bold}</style>\n";
}

std::string text(double x, double y, std::string_view s, std::string_view extra = "") {
  return "<text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", y) + "\"" + (extra.empty() ? "" : " ") +
         std::string(extra) + ">" + xml_escape(s) + "</text>\n";
}

std::string rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke = "none") {
  return "<rect x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", y) + "\" width=\"" + fmt("%.1f", w) + "\" height=\"" +
         fmt("%.1f", h) + "\" fill=\"" + std::string(fill) + "\" stroke=\"" + std::string(stroke) + "\"/>\n";
}

std::string line(double x1, double y1, double x2, double y2, std::string_view stroke) {
  return "<line x1=\"" + fmt("%.1f", x1) + "\" y1=\"" + fmt("%.1f", y1) + "\" x2=\"" + fmt("%.1f", x2) + "\" y2=\"" +
         fmt("%.1f", y2) + "\" stroke=\"" + std::string(stroke) + "\"/>\n";
}

std::size_t count_common(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end());
  std::size_t n = 0;
  for (const auto& s : b) n += sa.count(s);
  return n;
}

Overlap overlap_of(const std::vector<MembraneProfile>& p, bool high) {
  Overlap o;
  std::array<std::set<std::string>, 3> sets;
  for (std::size_t i = 0; i < 3; ++i) {
    o.names[i] = std::string(membrane_name(p[i].membrane));
    const auto& v = high ? p[i].high : p[i].low;
    sets[i] = {v.begin(), v.end()};
    o.sizes[i] = v.size();
  }
  auto pair = [&](std::size_t a, std::size_t b) {
    return count_common({sets[a].begin(), sets[a].end()}, {sets[b].begin(), sets[b].end()});
  };
  o.ab = pair(0, 1);
  o.ac = pair(0, 2);
  o.bc = pair(1, 2);
  for (const auto& s : sets[0]) o.abc += sets[1].count(s) && sets[2].count(s);
  return o;
}

void add_quartile_cells(std::vector<std::string>& row, const Quartiles& q) {
  row.push_back(std::to_string(q.n));
  for (double v : {q.min, q.q1, q.median, q.q3, q.max}) row.push_back(q.n ? data::format_double(v) : "");
}

}  // namespace

ImportanceMatrix feature_importance(const tuning::CvPlan& plan, const tuning::Dataset& dataset,
                                    const std::vector<tuning::Selection>& tuned_en) {
  std::unordered_map<std::string, int> fold_of;
  for (std::size_t i = 0; i < plan.folds.ids.size(); ++i) fold_of[plan.folds.ids[i]] = plan.folds.folds[i];
  std::vector<int> folds;
  for (const auto& id : dataset.ids) {
    const auto it = fold_of.find(id);
    if (it == fold_of.end()) throw Error(ErrorKind::SchemaError, "compound '" + id + "' has no fold");
    folds.push_back(it->second);
  }

  ImportanceMatrix out;
  out.features = dataset.feature_names;
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t t = 0; t < dataset.target_names.size(); ++t) {
    const auto sel = std::find_if(tuned_en.begin(), tuned_en.end(), [&](const tuning::Selection& s) {
      return s.model_class == models::ModelClass::EN && !s.multitask && s.target == dataset.target_names[t] &&
             s.representation == dataset.representation;
    });
    if (sel == tuned_en.end()) continue;
    const double alpha = sel->params.value("alpha", 1.0);
    const double l1 = sel->params.value("l1_ratio", 0.5);
    for (int f : plan.cv_folds) {
      std::vector<std::size_t> train;
      for (std::size_t i = 0; i < folds.size(); ++i)
        if (folds[i] != f && folds[i] != plan.test_fold &&
            std::find(plan.cv_folds.begin(), plan.cv_folds.end(), folds[i]) != plan.cv_folds.end())
          train.push_back(i);
      const auto stats = data::fit_normalization(dataset.x, dataset.feature_names, train, data::ZeroVariance::Center);
      const Eigen::MatrixXd xs = data::apply_normalization(stats, dataset.x);
      std::vector<Eigen::Index> obs;
      for (std::size_t i : train)
        if (!std::isnan(dataset.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t))))
          obs.push_back(static_cast<Eigen::Index>(i));
      Eigen::MatrixXd xt(static_cast<Eigen::Index>(obs.size()), xs.cols());
      Eigen::VectorXd yt(static_cast<Eigen::Index>(obs.size()));
      for (std::size_t i = 0; i < obs.size(); ++i) {
        xt.row(static_cast<Eigen::Index>(i)) = xs.row(obs[i]);
        yt(static_cast<Eigen::Index>(i)) = dataset.y(obs[i], static_cast<Eigen::Index>(t));
      }
      rows.push_back(models::fit_elastic_net(xt, yt, alpha, l1).coef.col(0));
      out.targets.push_back(dataset.target_names[t]);
      out.folds.push_back(f);
    }
  }
  out.coefficients.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.features.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.coefficients.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

std::string importance_csv(const ImportanceMatrix& m) {
  data::CsvTable t;
  t.header = {"target", "fold"};
  t.header.insert(t.header.end(), m.features.begin(), m.features.end());
  for (Eigen::Index i = 0; i < m.coefficients.rows(); ++i) {
    std::vector<std::string> row{m.targets[static_cast<std::size_t>(i)], std::to_string(m.folds[static_cast<std::size_t>(i)])};
    for (Eigen::Index j = 0; j < m.coefficients.cols(); ++j) row.push_back(data::format_double(m.coefficients(i, j)));
    t.rows.push_back(std::move(row));
  }
  return data::format_csv(t);
}

ImportanceMatrix parse_importance_csv(std::string_view text) {
  const auto t = data::parse_csv(text, "importance.csv");
  if (t.header.size() < 2 || t.header[0] != "target" || t.header[1] != "fold")
    throw Error(ErrorKind::SchemaError, "importance table must start with target,fold");
  ImportanceMatrix m;
  m.features.assign(t.header.begin() + 2, t.header.end());
  m.coefficients.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(m.features.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) throw Error(ErrorKind::ParseError, "importance row " + std::to_string(i + 2) + " has the wrong width");
    m.targets.push_back(row[0]);
    m.folds.push_back(std::stoi(row[1]));
    for (std::size_t j = 2; j < row.size(); ++j)
      m.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 2)) =
          data::parse_number(row[j], "importance.csv", i + 2, t.header[j]).value_or(NAN);
  }
  return m;
}

std::string importance_svg(const ImportanceMatrix& m) {
  const double cell = 14.0, left = 110.0, top = 30.0, label = 120.0;
  const double width = left + cell * static_cast<double>(m.features.size()) + 20.0;
  const double height = top + cell * static_cast<double>(m.targets.size()) + label;
  const double scale = m.coefficients.size() ? std::max(m.coefficients.cwiseAbs().maxCoeff(), 1e-300) : 1.0;
  std::string s = svg_open(width, height);
  s += text(left, 18.0, "Elastic-net coefficients per CV fold (max |w| = " + fmt("%.3g", scale) + ")", "class=\"title\"");
  for (std::size_t i = 0; i < m.targets.size(); ++i) {
    const double y = top + cell * static_cast<double>(i);
    s += text(4.0, y + cell - 3.0, m.targets[i] + " f" + std::to_string(m.folds[i]));
    for (std::size_t j = 0; j < m.features.size(); ++j)
      s += rect(left + cell * static_cast<double>(j), y, cell, cell,
                diverging(m.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / scale));
    if (i + 1 < m.targets.size() && m.targets[i + 1] != m.targets[i])
      s += line(left, y + cell, width - 20.0, y + cell, "#000");
  }
  const double base = top + cell * static_cast<double>(m.targets.size()) + 6.0;
  for (std::size_t j = 0; j < m.features.size(); ++j) {
    const double x = left + cell * (static_cast<double>(j) + 0.7);
    s += text(x, base, m.features[j], "transform=\"rotate(90 " + fmt("%.1f", x) + " " + fmt("%.1f", base) + ")\"");
  }
  return s + "</svg>\n";
}

Quartiles quartiles(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }), values.end());
  Quartiles q;
  q.n = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.min = values.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = values.back();
  return q;
}

ProfileReport top_bottom_profiles(const std::vector<std::string>& ids, const Eigen::MatrixXd& log_pe,
                                  const std::vector<Membrane>& membranes, std::size_t k,
                                  const PropertyTable& properties, const std::vector<std::string>& property_names) {
  if (log_pe.rows() != static_cast<Eigen::Index>(ids.size()) || log_pe.cols() != static_cast<Eigen::Index>(kMembraneCount))
    throw Error(ErrorKind::DimensionMismatch, "logPe table must be compounds x 6 membranes");
  ProfileReport r;

  std::unordered_map<std::string, Eigen::Index> prop_row;
  for (std::size_t i = 0; i < properties.ids.size(); ++i) prop_row[properties.ids[i]] = static_cast<Eigen::Index>(i);
  std::vector<std::pair<std::string, Eigen::Index>> props;
  for (const auto& name : property_names) {
    auto it = std::find(properties.names.begin(), properties.names.end(), name);
    if (it == properties.names.end())
      it = std::find_if(properties.names.begin(), properties.names.end(),
                        [&](const std::string& n) { return lower(n) == lower(name); });
    if (it == properties.names.end())
      r.missing_properties.push_back(name);
    else
      props.emplace_back(name, static_cast<Eigen::Index>(it - properties.names.begin()));
  }

  for (Membrane m : membranes) {
    const auto col = static_cast<Eigen::Index>(m);
    std::vector<std::size_t> avail;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (std::isfinite(log_pe(static_cast<Eigen::Index>(i), col))) avail.push_back(i);
    auto by_value = [&](bool descending) {
      auto v = avail;
      std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
        const double va = log_pe(static_cast<Eigen::Index>(a), col), vb = log_pe(static_cast<Eigen::Index>(b), col);
        if (va != vb) return descending ? va > vb : va < vb;
        return ids[a] < ids[b];
      });
      return v;
    };
    std::size_t take = k;
    if (avail.size() < 2 * k) {
      take = avail.size() / 2;
      r.warnings.push_back(std::string(membrane_name(m)) + ": only " + std::to_string(avail.size()) +
                           " compounds with values, sets truncated to " + std::to_string(take));
    }
    MembraneProfile p;
    p.membrane = m;
    const auto hi = by_value(true), lo = by_value(false);
    for (std::size_t i = 0; i < take; ++i) {
      p.high.push_back(ids[hi[i]]);
      p.low.push_back(ids[lo[i]]);
    }
    for (const auto& [name, c] : props) {
      auto gather = [&](const std::vector<std::string>& set) {
        std::vector<double> v;
        for (const auto& id : set) {
          const auto it = prop_row.find(id);
          v.push_back(it == prop_row.end() ? NAN : properties.values(it->second, c));
        }
        return quartiles(v);
      };
      p.properties.push_back({name, gather(p.high), gather(p.low)});
    }
    r.membranes.push_back(std::move(p));
  }
  if (r.membranes.size() == 3) {
    r.high_overlap = overlap_of(r.membranes, true);
    r.low_overlap = overlap_of(r.membranes, false);
  }
  for (const auto& p : r.membranes) {
    if (p.membrane != Membrane::DOD) continue;
    for (const auto& s : p.properties)
      if (lower(s.property) == "logp" && s.high.n > 0)
        r.trend_checks.push_back("median logP of high-DOD set = " + fmt("%.3f", s.high.median) +
                                 (s.high.median > 3.5 ? " (> 3.5)" : " (not > 3.5)"));
  }
  return r;
}

std::string profiles_csv(const ProfileReport& r) {
  data::CsvTable t;
  t.header = {"membrane", "set", "property", "n", "min", "q1", "median", "q3", "max"};
  for (const auto& p : r.membranes)
    for (const auto& s : p.properties)
      for (bool high : {true, false}) {
        std::vector<std::string> row{std::string(membrane_name(p.membrane)), high ? "high" : "low", s.property};
        add_quartile_cells(row, high ? s.high : s.low);
        t.rows.push_back(std::move(row));
      }
  return data::format_csv(t);
}

std::string profile_sets_csv(const ProfileReport& r) {
  data::CsvTable t;
  t.header = {"membrane", "set", "rank", "compound_id"};
  for (const auto& p : r.membranes)
    for (bool high : {true, false}) {
      const auto& v = high ? p.high : p.low;
      for (std::size_t i = 0; i < v.size(); ++i)
        t.rows.push_back({std::string(membrane_name(p.membrane)), high ? "high" : "low", std::to_string(i + 1), v[i]});
    }
  return data::format_csv(t);
}

std::string overlaps_csv(const ProfileReport& r) {
  data::CsvTable t;
  t.header = {"set", "a", "b", "c", "size_a", "size_b", "size_c", "ab", "ac", "bc", "abc"};
  for (const auto& [label, o] : {std::pair{"high", r.high_overlap}, std::pair{"low", r.low_overlap}}) {
    if (!o) continue;
    t.rows.push_back({label, o->names[0], o->names[1], o->names[2], std::to_string(o->sizes[0]),
                      std::to_string(o->sizes[1]), std::to_string(o->sizes[2]), std::to_string(o->ab),
                      std::to_string(o->ac), std::to_string(o->bc), std::to_string(o->abc)});
  }
  return data::format_csv(t);
}

std::string profiles_svg(const ProfileReport& r) {
  std::vector<std::string> names;
  for (const auto& p : r.membranes)
    for (const auto& s : p.properties)
      if (std::find(names.begin(), names.end(), s.property) == names.end()) names.push_back(s.property);
  const double panel_w = 60.0 * static_cast<double>(std::max<std::size_t>(r.membranes.size(), 1)) + 60.0;
  const double panel_h = 180.0;
  const double width = std::max(200.0, panel_w * static_cast<double>(std::max<std::size_t>(names.size(), 1)));
  std::string s = svg_open(width, panel_h + 60.0);
  s += text(10.0, 18.0, "Property quartiles of high (red) and low (blue) permeability sets", "class=\"title\"");
  for (std::size_t pi = 0; pi < names.size(); ++pi) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : r.membranes)
      for (const auto& ps : p.properties)
        if (ps.property == names[pi])
          for (const Quartiles* q : {&ps.high, &ps.low})
            if (q->n) {
              lo = std::min(lo, q->min);
              hi = std::max(hi, q->max);
            }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double x0 = panel_w * static_cast<double>(pi) + 40.0, y0 = 40.0;
    auto ypos = [&](double v) { return y0 + panel_h - 20.0 - (v - lo) / (hi - lo) * (panel_h - 40.0); };
    s += text(x0, y0 - 6.0, names[pi]);
    s += text(x0 - 36.0, ypos(hi) + 3.0, fmt("%.3g", hi));
    s += text(x0 - 36.0, ypos(lo) + 3.0, fmt("%.3g", lo));
    s += line(x0, ypos(lo), x0, ypos(hi), "#888");
    for (std::size_t mi = 0; mi < r.membranes.size(); ++mi) {
      const auto& p = r.membranes[mi];
      const auto it = std::find_if(p.properties.begin(), p.properties.end(),
                                   [&](const PropertySummary& ps) { return ps.property == names[pi]; });
      const double xm = x0 + 10.0 + 60.0 * static_cast<double>(mi);
      s += text(xm + 8.0, y0 + panel_h, membrane_name(p.membrane));
      if (it == p.properties.end()) continue;
      int side = 0;
      for (const auto& [q, color] : {std::pair{&it->high, "#d6604d"}, std::pair{&it->low, "#4393c3"}}) {
        const double xb = xm + 26.0 * side++;
        if (!q->n) continue;
        s += line(xb + 10.0, ypos(q->min), xb + 10.0, ypos(q->max), "#333");
        s += rect(xb, ypos(q->q3), 20.0, std::max(0.5, ypos(q->q1) - ypos(q->q3)), color, "#333");
        s += line(xb, ypos(q->median), xb + 20.0, ypos(q->median), "#000");
      }
    }
  }
  return s + "</svg>\n";
}

ScaffoldReport scaffold_report(const std::vector<std::string>& ids, const std::vector<std::string>& smiles,
                               ScaffoldMode mode) {
  if (ids.size() != smiles.size()) throw Error(ErrorKind::DimensionMismatch, "ids and SMILES differ in length");
  ScaffoldReport r;
  std::set<std::string> unique;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::string scaffold;
    try {
      const auto mol = chem::parse_smiles(smiles[i]);
      scaffold = chem::write_smiles(mode == ScaffoldMode::Murcko ? chem::generic_murcko_scaffold(mol)
                                                                 : chem::generic_graph(mol));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Acyclic) {
        scaffold = kAcyclicScaffold;
      } else {
        r.failures.emplace_back(ids[i], e.what());
        continue;
      }
    }
    r.ids.push_back(ids[i]);
    r.scaffolds.push_back(scaffold);
    unique.insert(scaffold);
  }
  r.unique = unique.size();
  return r;
}

std::string scaffolds_csv(const ScaffoldReport& r) {
  data::CsvTable t;
  t.header = {"compound_id", "scaffold"};
  for (std::size_t i = 0; i < r.ids.size(); ++i) t.rows.push_back({r.ids[i], r.scaffolds[i]});
  for (const auto& [id, msg] : r.failures) t.rows.push_back({id, "ERROR: " + msg});
  return data::format_csv(t);
}

std::string scaffold_repeats_csv(const ScaffoldReport& r) {
  std::map<std::string, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < r.ids.size(); ++i) groups[r.scaffolds[i]].push_back(r.ids[i]);
  std::vector<std::pair<std::string, std::vector<std::string>>> repeated;
  for (auto& g : groups)
    if (g.second.size() >= 2) repeated.emplace_back(g.first, g.second);
  std::stable_sort(repeated.begin(), repeated.end(),
                   [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
  data::CsvTable t;
  t.header = {"scaffold", "group_size", "compound_id"};
  for (const auto& [scaffold, members] : repeated)
    for (const auto& id : members) t.rows.push_back({scaffold, std::to_string(members.size()), id});
  return data::format_csv(t);
}

}  // namespace qspr::analyze
