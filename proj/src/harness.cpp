#include "arxid/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace arxid {

namespace {

const std::set<std::string> kStrategies = {"random", "active", "multi-eig"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

std::int64_t integer(const json& j, const std::string& field) {
  if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>())) {
    throw ConfigError(field, "expected an integer");
  }
  return j.is_number_integer() ? j.get<std::int64_t>() : static_cast<std::int64_t>(j.get<double>());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split_csv_line(line));
  }
  return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
  system.validate();
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
  if (schedule.T0 < 1) throw ConfigError("T0", "must be a positive integer");
  if (schedule.k0 < 1) throw ConfigError("k0", "must be a positive integer");
  if (schedule.episodes < 1 || schedule.episodes > 20) throw ConfigError("episodes", "must lie in 1..20");
  if (schedule.warmup < 1) throw ConfigError("warmup", "must be a positive integer");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds", "seeds must be distinct");
  }
  if (strategies.empty()) throw ConfigError("strategies", "at least one strategy is required");
  for (const auto& s : strategies) {
    if (!kStrategies.count(s)) throw ConfigError("strategies", "unknown strategy '" + s + "'");
  }
  if (std::set<std::string>(strategies.begin(), strategies.end()).size() != strategies.size()) {
    throw ConfigError("strategies", "duplicate strategy");
  }
  if (!(solver.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
  if (solver.max_iter < 1) throw ConfigError("solver.max_iter", "must be a positive integer");
  if (!(reference_horizon >= 1.0)) throw ConfigError("reference_horizon", "must be >= 1");
  if (!(reference_step > 0.0)) throw ConfigError("reference_step", "must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

ExperimentConfig parse_config(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  static const std::set<std::string> known = {
      "system", "gamma",  "T0",        "k0",     "episodes",          "warmup",         "seeds",
      "base_seed", "runs", "strategies", "solver", "reference_horizon", "reference_step", "output_dir",
      "store_inputs"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(it.key(), "unknown field");
  }

  ExperimentConfig cfg;
  auto note_default = [&](const std::string& field, const std::string& value) {
    cfg.notes.push_back(field + " not given; default " + value + " applied");
  };

  if (j.contains("system")) {
    const json& s = j.at("system");
    if (s.is_string()) {
      const std::string name = s.get<std::string>();
      if (name == "paper") {
        cfg.system = paper_system();
        cfg.system_source = "paper";
      } else {
        const fs::path path = fs::path(base_dir) / name;
        try {
          cfg.system = load_system(path.string());
        } catch (const Error& e) {
          throw ConfigError("system", e.what());
        }
        cfg.system_source = path.string();
      }
    } else if (s.is_object()) {
      try {
        cfg.system = s.get<ARXParams>();
      } catch (const Error& e) {
        throw ConfigError("system", e.what());
      } catch (const json::exception& e) {
        throw ConfigError("system", e.what());
      }
      cfg.system_source = "inline";
    } else {
      throw ConfigError("system", "expected \"paper\", a file path, or an inline object");
    }
  } else {
    note_default("system", "paper");
  }

  if (j.contains("gamma")) {
    cfg.gamma = number(j.at("gamma"), "gamma");
  } else {
    note_default("gamma", "10");
  }
  if (j.contains("T0")) {
    cfg.schedule.T0 = integer(j.at("T0"), "T0");
  } else {
    note_default("T0", "200");
  }
  if (j.contains("k0")) {
    cfg.schedule.k0 = static_cast<int>(integer(j.at("k0"), "k0"));
  } else {
    note_default("k0", "10");
  }
  if (j.contains("episodes")) {
    cfg.schedule.episodes = static_cast<int>(integer(j.at("episodes"), "episodes"));
  } else {
    note_default("episodes", "4");
  }
  if (j.contains("warmup")) {
    cfg.schedule.warmup = integer(j.at("warmup"), "warmup");
  } else {
    note_default("warmup", "50");
  }

  if (j.contains("seeds")) {
    if (j.contains("base_seed") || j.contains("runs")) {
      throw ConfigError("seeds", "give either a seed list or base_seed/runs, not both");
    }
    const json& s = j.at("seeds");
    if (!s.is_array()) throw ConfigError("seeds", "expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::int64_t v = integer(s[i], "seeds[" + std::to_string(i) + "]");
      if (v < 0) throw ConfigError("seeds[" + std::to_string(i) + "]", "must be non-negative");
      cfg.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  } else {
    std::int64_t base = 0, runs = 20;
    if (j.contains("base_seed")) {
      base = integer(j.at("base_seed"), "base_seed");
      if (base < 0) throw ConfigError("base_seed", "must be non-negative");
    } else {
      note_default("base_seed", "0");
    }
    if (j.contains("runs")) {
      runs = integer(j.at("runs"), "runs");
      if (runs < 1) throw ConfigError("runs", "must be a positive integer");
    } else {
      note_default("runs", "20");
    }
    for (std::int64_t r = 0; r < runs; ++r) cfg.seeds.push_back(static_cast<std::uint64_t>(base + r));
  }

  if (j.contains("strategies")) {
    const json& s = j.at("strategies");
    if (!s.is_array()) throw ConfigError("strategies", "expected an array of names");
    cfg.strategies.clear();
    for (const auto& v : s) {
      if (!v.is_string()) throw ConfigError("strategies", "expected strategy names");
      cfg.strategies.push_back(v.get<std::string>());
    }
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    if (!s.is_object()) throw ConfigError("solver", "expected an object");
    static const std::set<std::string> solver_keys = {"tol",       "max_iter",  "tau_initial",     "tau_factor",
                                                      "tau_floor", "max_master_steps", "rank1_attempts"};
    for (auto it = s.begin(); it != s.end(); ++it) {
      if (!solver_keys.count(it.key())) throw ConfigError("solver." + it.key(), "unknown field");
    }
    if (s.contains("tol")) cfg.solver.tol = number(s.at("tol"), "solver.tol");
    if (s.contains("max_iter")) cfg.solver.max_iter = static_cast<int>(integer(s.at("max_iter"), "solver.max_iter"));
    if (s.contains("tau_initial")) cfg.solver.tau_initial = number(s.at("tau_initial"), "solver.tau_initial");
    if (s.contains("tau_factor")) cfg.solver.tau_factor = number(s.at("tau_factor"), "solver.tau_factor");
    if (s.contains("tau_floor")) cfg.solver.tau_floor = number(s.at("tau_floor"), "solver.tau_floor");
    if (s.contains("max_master_steps")) {
      cfg.solver.max_master_steps = static_cast<int>(integer(s.at("max_master_steps"), "solver.max_master_steps"));
    }
    if (s.contains("rank1_attempts")) {
      cfg.solver.rank1_attempts = static_cast<int>(integer(s.at("rank1_attempts"), "solver.rank1_attempts"));
    }
  }
  if (j.contains("reference_horizon")) cfg.reference_horizon = number(j.at("reference_horizon"), "reference_horizon");
  if (j.contains("reference_step")) cfg.reference_step = number(j.at("reference_step"), "reference_step");
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir", "expected a string");
    cfg.output_dir = (fs::path(base_dir) / j.at("output_dir").get<std::string>()).string();
  } else {
    cfg.output_dir = (fs::path(base_dir) / cfg.output_dir).string();
  }
  if (j.contains("store_inputs")) {
    if (!j.at("store_inputs").is_boolean()) throw ConfigError("store_inputs", "expected true or false");
    cfg.store_inputs = j.at("store_inputs").get<bool>();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("<file>", std::string("parse error: ") + e.what());
  }
  return parse_config(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

json config_to_json(const ExperimentConfig& cfg) {
  json solver = {{"tol", cfg.solver.tol},
                 {"max_iter", cfg.solver.max_iter},
                 {"tau_initial", cfg.solver.tau_initial},
                 {"tau_factor", cfg.solver.tau_factor},
                 {"tau_floor", cfg.solver.tau_floor},
                 {"max_master_steps", cfg.solver.max_master_steps},
                 {"rank1_attempts", cfg.solver.rank1_attempts}};
  return json{{"system", cfg.system},
              {"gamma", cfg.gamma},
              {"T0", cfg.schedule.T0},
              {"k0", cfg.schedule.k0},
              {"episodes", cfg.schedule.episodes},
              {"warmup", cfg.schedule.warmup},
              {"seeds", cfg.seeds},
              {"strategies", cfg.strategies},
              {"solver", solver},
              {"reference_horizon", cfg.reference_horizon},
              {"reference_step", cfg.reference_step},
              {"output_dir", cfg.output_dir},
              {"store_inputs", cfg.store_inputs}};
}

std::vector<std::string> SummaryTable::strategies() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.strategy) == out.end()) out.push_back(r.strategy);
  }
  return out;
}

std::vector<SummaryRow> SummaryTable::series(const std::string& strategy) const {
  std::vector<SummaryRow> out;
  for (const auto& r : rows) {
    if (r.strategy == strategy) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const SummaryRow& a, const SummaryRow& b) { return a.T < b.T; });
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  std::ofstream jsonl(dir / "episodes.jsonl");
  std::ofstream ecsv(dir / "episodes.csv");
  std::ofstream ccsv(dir / "checkpoints.csv");
  if (!jsonl || !ecsv || !ccsv) throw InvalidParameter("cannot write archive in " + dir.string());
  ecsv << "strategy,run,seed,episode,kind,T,length,error,energy,gap\n";
  ccsv << "strategy,run,seed,T,error,extension\n";

  const std::int64_t horizon = cfg.schedule.total();
  ExperimentResult result;
  result.archive = dir.string();
  json quarantine = json::array();
  json runs = json::array();

  for (const auto& strategy : cfg.strategies) {
    for (std::size_t r = 0; r < cfg.seeds.size(); ++r) {
      const std::uint64_t seed = cfg.seeds[r];
      LoopOptions lo;
      lo.solver = cfg.solver;
      lo.keep_inputs = cfg.store_inputs;
      RunRecord rec;
      try {
        if (strategy == "random") {
          const auto T_ref = static_cast<std::int64_t>(std::ceil(cfg.reference_horizon * horizon));
          for (int i = 1;; ++i) {
            const auto T = static_cast<std::int64_t>(std::llround(horizon * (1.0 + cfg.reference_step * i)));
            if (T > T_ref) break;
            lo.extra_checkpoints.push_back(T);
          }
          rec = run_random(cfg.system, cfg.schedule, cfg.gamma, std::max(T_ref, horizon), seed, lo);
        } else if (strategy == "active") {
          rec = run_active(cfg.system, cfg.schedule, cfg.gamma, seed, lo);
        } else {
          rec = run_multi_eig(cfg.system, cfg.schedule, cfg.gamma, seed, lo);
        }
      } catch (const std::exception& e) {
        quarantine.push_back(json{{"strategy", strategy}, {"run", r}, {"seed", seed}, {"error", e.what()}});
        ++result.quarantined;
        continue;
      }
      for (const auto& e : rec.episodes) {
        json rec_json = e;
        rec_json["strategy"] = strategy;
        rec_json["run"] = r;
        rec_json["seed"] = seed;
        jsonl << rec_json.dump() << '\n';
        ecsv << strategy << ',' << r << ',' << seed << ',' << e.episode << ',' << e.kind << ',' << e.cumulative << ','
             << e.length << ',' << fmt(e.error) << ',' << fmt(e.energy) << ','
             << (e.has_report ? fmt(e.report.gap) : std::string()) << '\n';
      }
      for (const auto& c : rec.checkpoints) {
        ccsv << strategy << ',' << r << ',' << seed << ',' << c.T << ',' << fmt(c.error) << ','
             << (c.T > horizon ? 1 : 0) << '\n';
      }
      runs.push_back(json{{"strategy", strategy}, {"run", r}, {"seed", seed}, {"samples", rec.samples}});
      ++result.completed;
    }
  }
  jsonl.close();
  ecsv.close();
  ccsv.close();

  json manifest = {{"format", "arxid-archive"},
                   {"version", 1},
                   {"config", config_to_json(cfg)},
                   {"system_source", cfg.system_source},
                   {"config_notes", cfg.notes},
                   {"gamma", cfg.gamma},
                   {"horizon", horizon},
                   {"checkpoints", cfg.schedule.boundaries()},
                   {"strategies", cfg.strategies},
                   {"completed", result.completed},
                   {"quarantined", result.quarantined},
                   {"runs", runs},
                   {"quarantine", quarantine},
                   {"files", {"episodes.jsonl", "episodes.csv", "checkpoints.csv", "summary.csv"}}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';

  result.summary = summarize(dir.string());
  write_summary_csv(result.summary, (dir / "summary.csv").string());
  return result;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidParameter("percentile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryTable summarize(const std::string& archive_dir) {
  const fs::path dir(archive_dir);
  std::ifstream min(dir / "manifest.json");
  if (!min) throw InvalidParameter("not an archive (no manifest.json): " + archive_dir);
  json manifest;
  min >> manifest;
  const double gamma = manifest.at("gamma").get<double>();
  const auto strategies = manifest.at("strategies").get<std::vector<std::string>>();

  // Per-run energy ratio.
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> energy;
  for (const auto& row : read_csv(dir / "episodes.csv")) {
    if (row.size() < 10) throw InvalidParameter("episodes.csv: malformed row");
    auto& e = energy[{row[0], row[1]}];
    e.first += std::stod(row[8]);
    e.second += gamma * gamma * std::stod(row[6]);
  }
  std::map<std::string, std::vector<double>> ratios;
  for (const auto& [key, e] : energy) ratios[key.first].push_back(e.second > 0.0 ? e.first / e.second : 0.0);

  std::map<std::string, std::map<std::int64_t, std::vector<double>>> errors;
  std::map<std::string, std::map<std::int64_t, bool>> ext;
  for (const auto& row : read_csv(dir / "checkpoints.csv")) {
    if (row.size() < 6) throw InvalidParameter("checkpoints.csv: malformed row");
    const std::int64_t T = std::stoll(row[3]);
    errors[row[0]][T].push_back(std::stod(row[4]));
    ext[row[0]][T] = row[5] == "1";
  }

  SummaryTable table;
  for (const auto& s : strategies) {
    if (!errors.count(s)) continue;
    double mean_ratio = 0.0;
    for (double v : ratios[s]) mean_ratio += v;
    if (!ratios[s].empty()) mean_ratio /= static_cast<double>(ratios[s].size());
    for (const auto& [T, vals] : errors[s]) {
      SummaryRow row;
      row.strategy = s;
      row.T = T;
      row.runs = static_cast<int>(vals.size());
      row.median = percentile(vals, 0.5);
      row.p25 = percentile(vals, 0.25);
      row.p75 = percentile(vals, 0.75);
      row.energy_ratio = mean_ratio;
      row.extension = ext[s][T];
      table.rows.push_back(row);
    }
  }
  return table;
}

void write_summary_csv(const SummaryTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write " + path);
  out << "strategy,T,runs,median,p25,p75,energy_ratio,extension\n";
  for (const auto& r : table.rows) {
    out << r.strategy << ',' << r.T << ',' << r.runs << ',' << fmt(r.median) << ',' << fmt(r.p25) << ','
        << fmt(r.p75) << ',' << fmt(r.energy_ratio) << ',' << (r.extension ? 1 : 0) << '\n';
  }
}

SummaryTable read_summary_csv(const std::string& path) {
  SummaryTable table;
  for (const auto& row : read_csv(path)) {
    if (row.size() < 8) throw InvalidParameter(path + ": malformed row");
    SummaryRow r;
    r.strategy = row[0];
    r.T = std::stoll(row[1]);
    r.runs = std::stoi(row[2]);
    r.median = std::stod(row[3]);
    r.p25 = std::stod(row[4]);
    r.p75 = std::stod(row[5]);
    r.energy_ratio = std::stod(row[6]);
    r.extension = row[7] == "1";
    table.rows.push_back(r);
  }
  return table;
}

namespace {

std::string color_for(const std::string& strategy, std::size_t index) {
  if (strategy == "active") return "#0072bd";
  if (strategy == "multi-eig") return "#d95319";
  if (strategy == "random") return "#edb120";
  static const char* extra[] = {"#7e2f8e", "#77ac30", "#4dbeee", "#a2142f"};
  return extra[index % 4];
}

std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const int a = static_cast<int>(std::floor(lo)), b = static_cast<int>(std::ceil(hi));
  for (int e = a; e <= b; ++e) {
    for (double m : {1.0, 2.0, 5.0}) {
      const double v = std::log10(m) + e;
      if (v >= lo - 1e-12 && v <= hi + 1e-12) ticks.push_back(v);
    }
  }
  return ticks;
}

std::string tick_label(double log_value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::pow(10.0, log_value));
  return buf;
}

}  // namespace

void emit_figure(const SummaryTable& table, const std::string& svg_path) {
  if (table.rows.empty()) throw InvalidParameter("emit_figure: empty table");
  const auto names = table.strategies();

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& r : table.rows) {
    if (r.T <= 0 || !(r.p25 > 0.0) || !(r.median > 0.0)) continue;
    xmin = std::min(xmin, std::log10(static_cast<double>(r.T)));
    xmax = std::max(xmax, std::log10(static_cast<double>(r.T)));
    ymin = std::min(ymin, std::log10(std::min(r.p25, r.median)));
    ymax = std::max(ymax, std::log10(std::max(r.p75, r.median)));
  }
  if (xmin > xmax) throw InvalidParameter("emit_figure: no positive values to plot on log axes");
  if (xmax - xmin < 1e-9) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-9) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double W = 720, H = 480, L = 80, R = 170, Tm = 30, B = 60;
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - Tm - B); };

  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (double t : log_ticks(xmin, xmax)) {
    svg << "<line x1=\"" << px(t) << "\" y1=\"" << Tm << "\" x2=\"" << px(t) << "\" y2=\"" << H - B
        << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << px(t) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << tick_label(t)
        << "</text>\n";
  }
  for (double t : log_ticks(ymin, ymax)) {
    svg << "<line x1=\"" << L << "\" y1=\"" << py(t) << "\" x2=\"" << W - R << "\" y2=\"" << py(t)
        << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << L - 6 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">" << tick_label(t)
        << "</text>\n";
  }
  svg << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << H - Tm - B
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">samples T</text>\n"
      << "<text transform=\"translate(18," << (Tm + H - B) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">estimation error (spectral norm)</text>\n";

  std::ostringstream csv;
  csv << "strategy,T,median,p25,p75\n";
  for (std::size_t s = 0; s < names.size(); ++s) {
    const auto series = table.series(names[s]);
    const std::string color = color_for(names[s], s);
    std::vector<const SummaryRow*> pts;
    for (const auto& r : series) {
      csv << r.strategy << ',' << r.T << ',' << fmt(r.median) << ',' << fmt(r.p25) << ',' << fmt(r.p75) << '\n';
      if (r.T > 0 && r.p25 > 0.0 && r.median > 0.0) pts.push_back(&r);
    }
    svg << "<g id=\"series-" << names[s] << "\">\n";
    if (pts.size() > 1) {
      svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (const auto* r : pts) svg << px(std::log10(double(r->T))) << ',' << py(std::log10(r->p75)) << ' ';
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        svg << px(std::log10(double((*it)->T))) << ',' << py(std::log10((*it)->p25)) << ' ';
      }
      svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (const auto* r : pts) svg << px(std::log10(double(r->T))) << ',' << py(std::log10(r->median)) << ' ';
      svg << "\"/>\n";
    }
    for (const auto* r : pts) {
      const double x = px(std::log10(double(r->T)));
      if (pts.size() == 1) {
        svg << "<line x1=\"" << x << "\" y1=\"" << py(std::log10(r->p25)) << "\" x2=\"" << x << "\" y2=\""
            << py(std::log10(r->p75)) << "\" stroke=\"" << color << "\" stroke-opacity=\"0.4\" stroke-width=\"6\"/>\n";
      }
      svg << "<circle cx=\"" << x << "\" cy=\"" << py(std::log10(r->median)) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    svg << "</g>\n";
    const double ly = Tm + 20 + 22 * static_cast<double>(s);
    svg << "<rect x=\"" << W - R + 15 << "\" y=\"" << ly - 9 << "\" width=\"24\" height=\"12\" fill=\"" << color
        << "\" fill-opacity=\"0.35\" stroke=\"" << color << "\"/>\n"
        << "<text x=\"" << W - R + 46 << "\" y=\"" << ly + 2 << "\">" << names[s] << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(svg_path);
  if (!out) throw InvalidParameter("cannot write " + svg_path);
  out << svg.str();
  const fs::path csv_path = fs::path(svg_path).replace_extension(".csv");
  std::ofstream(csv_path) << csv.str();
}

std::string Crossover::text() const {
  char buf[128];
  if (reached) {
    std::snprintf(buf, sizeof buf, "%.4f", ratio);
  } else {
    std::snprintf(buf, sizeof buf, "> %.4f (horizon ratio)", horizon_ratio);
  }
  return buf;
}

Crossover crossover_metric(const SummaryTable& table, const std::string& reference, const std::string& target) {
  auto ref = table.series(reference);
  auto tgt = table.series(target);
  if (ref.empty()) throw InvalidParameter("crossover_metric: no rows for '" + reference + "'");
  if (tgt.empty()) throw InvalidParameter("crossover_metric: no rows for '" + target + "'");
  std::erase_if(tgt, [](const SummaryRow& r) { return r.extension; });
  if (tgt.empty()) throw InvalidParameter("crossover_metric: target has no shared checkpoints");

  Crossover c;
  c.target_T = tgt.back().T;
  c.target_error = tgt.back().median;
  c.horizon_ratio = static_cast<double>(ref.back().T) / static_cast<double>(c.target_T);

  double running = ref.front().median;
  double prev_T = static_cast<double>(ref.front().T), prev_m = running;
  if (running <= c.target_error) {
    c.ratio = prev_T / static_cast<double>(c.target_T);
    return c;
  }
  for (std::size_t i = 1; i < ref.size(); ++i) {
    const double T = static_cast<double>(ref[i].T);
    const double m = std::min(running, ref[i].median);
    if (m <= c.target_error) {
      double x;
      if (m == prev_m || m <= 0.0 || prev_m <= 0.0 || c.target_error <= 0.0) {
        x = T;
      } else {
        const double f = (std::log(prev_m) - std::log(c.target_error)) / (std::log(prev_m) - std::log(m));
        x = std::exp(std::log(prev_T) + f * (std::log(T) - std::log(prev_T)));
      }
      c.ratio = x / static_cast<double>(c.target_T);
      return c;
    }
    running = m;
    prev_T = T;
    prev_m = m;
  }
  c.reached = false;
  c.ratio = c.horizon_ratio;
  return c;
}

}  // namespace arxid
