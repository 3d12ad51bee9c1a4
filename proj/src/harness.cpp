#include "dtlearn/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace dtl {

namespace {

using nlohmann::json;

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string cell_key(int n, int d) {
  return "n=" + std::to_string(n) + ",d=" + std::to_string(d);
}

double note(const RunReport& r, const std::string& key) {
  for (const auto& [k, v] : r.extra) {
    if (k == key) return v;
  }
  return -1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

// Per-run reference values and the measured phases they bound.
struct Refs {
  double find_relevant = -1, learn_mp = -1, var_id = -1;
  bool violated = false;
};

struct TrialOut {
  Record rec;
  double wall_ms = 0;
  bool capacity = false;
  Refs refs;
};

TrialOut run_trial(const ExperimentConfig& cfg, Algo algo, int n, int d, int trial) {
  TrialOut out;
  Record& rec = out.rec;
  rec.algo = algo_name(algo);
  rec.n = n;
  rec.d = d;
  rec.trial = trial;
  rec.seed = trial_seed(cfg.seed, rec.algo + ":" + cell_key(n, d), trial);
  const DecisionTree tree = instance_tree(cfg.seed, n, d, trial);
  MembershipOracle o(tree);
  LearnResult r;
  try {
    switch (algo) {
      case Algo::Det:
        r = deterministic_learn(o, n, d);
        break;
      case Algo::Rand: {
        ReductionOptions ro;
        ro.delta = cfg.delta;
        ro.seed = rec.seed;
        r = randomized_reduction_learn(o, n, d, ro);
        break;
      }
      case Algo::Km:
        r = km_direct_learn(o, n, d, cfg.delta, rec.seed);
        break;
    }
  } catch (const CapacityError&) {
    out.capacity = true;
    return out;
  } catch (const InvariantError&) {
    rec.raw_queries = o.raw_count();
    rec.dedup_queries = o.dedup_count();
    rec.phases.interp = o.raw_count();
    return out;
  }
  rec.success = verify_hypothesis(r.h, tree);
  rec.raw_queries = r.report.raw_queries;
  rec.dedup_queries = r.report.dedup_queries;
  rec.phases = r.report.phases;
  out.wall_ms = r.report.wall_ms;
  rec.runtime_ms = cfg.record_runtime ? std::round(r.report.wall_ms * 1000) / 1000 : 0;

  const PhaseBudget& b = cfg.budget;
  const PhaseCounts& p = rec.phases;
  out.capacity = p.design > b.design || p.binary > b.binary || p.interp > b.interp ||
                 p.km > b.km || p.var_id > b.var_id;

  const double V = static_cast<double>(dt_to_mp(tree).support().size());
  const double logn = ceil_log2(static_cast<uint64_t>(n));
  if (algo == Algo::Det) {
    out.refs.find_relevant = 2 * note(r.report, "design_size") + V * logn;
    out.refs.learn_mp = note(r.report, "zero_test_size") * note(r.report, "zero_tests");
    out.refs.violated = static_cast<double>(p.design + p.binary) > out.refs.find_relevant ||
                        static_cast<double>(p.interp) > out.refs.learn_mp;
  } else if (algo == Algo::Rand) {
    out.refs.var_id = V * logn;
    out.refs.violated = static_cast<double>(p.var_id) > out.refs.var_id;
  }
  return out;
}

std::string fmt(double v) {
  if (v < 0) return "-";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known{"algos",   "n",        "d",     "trials",
                                           "delta",   "seed",     "threads", "record_runtime",
                                           "csv",     "table",    "plots", "budget",
                                           "thresholds"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ValidationError("unknown config field '" + k + "'");
  }
  ExperimentConfig cfg;
  for (const auto& a : get_field<std::vector<std::string>>(j, "algos", {})) {
    try {
      cfg.algos.push_back(parse_algo(a));
    } catch (const ParameterError& e) {
      throw ValidationError(e.what());
    }
  }
  cfg.n_grid = get_field<std::vector<int>>(j, "n", {});
  cfg.d_grid = get_field<std::vector<int>>(j, "d", {});
  cfg.trials = get_field<int>(j, "trials", 1);
  cfg.delta = get_field<double>(j, "delta", cfg.delta);
  cfg.seed = get_field<uint64_t>(j, "seed", cfg.seed);
  cfg.threads = get_field<int>(j, "threads", 1);
  cfg.record_runtime = get_field<bool>(j, "record_runtime", false);
  cfg.csv_path = get_field<std::string>(j, "csv", "");
  cfg.table_path = get_field<std::string>(j, "table", "");
  cfg.plot_dir = get_field<std::string>(j, "plots", "");
  if (j.contains("budget")) {
    const json& b = j.at("budget");
    if (!b.is_object()) throw ValidationError("budget must be an object");
    for (const auto& [k, v] : b.items()) {
      if (!v.is_number()) throw ValidationError("budget '" + k + "' must be a number");
      const double x = v.get<double>();
      if (!(x > 0)) throw ValidationError("budget '" + k + "' must be positive");
      const uint64_t u = x >= 1.8e19 ? UINT64_MAX : static_cast<uint64_t>(x);
      if (k == "design") cfg.budget.design = u;
      else if (k == "binary") cfg.budget.binary = u;
      else if (k == "interp") cfg.budget.interp = u;
      else if (k == "km") cfg.budget.km = u;
      else if (k == "var_id") cfg.budget.var_id = u;
      else throw ValidationError("unknown budget phase '" + k + "'");
    }
  }
  if (j.contains("thresholds")) {
    for (const auto& [k, v] : j.at("thresholds").items()) {
      try {
        cfg.success_threshold[parse_algo(k)] = v.get<double>();
      } catch (const std::exception& e) {
        throw ValidationError("threshold '" + k + "': " + e.what());
      }
    }
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.algos.empty()) throw ValidationError("config needs at least one algorithm");
  if (cfg.n_grid.empty() || cfg.d_grid.empty()) throw ValidationError("grids must be non-empty");
  if (cfg.trials < 1) throw ValidationError("trials must be >= 1");
  if (cfg.threads < 1) throw ValidationError("threads must be >= 1");
  if (!(cfg.delta > 0 && cfg.delta < 1)) throw ValidationError("delta must lie in (0, 1)");
  const PhaseBudget& b = cfg.budget;
  if (!b.design || !b.binary || !b.interp || !b.km || !b.var_id) {
    throw ValidationError("budgets must be positive");
  }
  for (int n : cfg.n_grid) {
    for (int d : cfg.d_grid) {
      if (n < 1 || d < 0 || d > 20) throw ValidationError("cell " + cell_key(n, d) + " out of range");
      if ((uint64_t{1} << d) > static_cast<uint64_t>(n)) {
        throw ValidationError("cell " + cell_key(n, d) + " has d > log2 n");
      }
    }
  }
}

uint64_t trial_seed(uint64_t seed, const std::string& cell, int trial) {
  return seed ^ splitmix(fnv1a(cell) + splitmix(static_cast<uint64_t>(trial)));
}

DecisionTree instance_tree(uint64_t seed, int n, int d, int trial) {
  Rng rng(trial_seed(seed, "tree:" + cell_key(n, d), trial));
  return random_tree(n, d, rng);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  struct Task {
    Algo algo;
    int n, d, trial;
  };
  std::vector<Task> tasks;
  for (Algo a : cfg.algos) {
    for (int n : cfg.n_grid) {
      for (int d : cfg.d_grid) {
        for (int t = 0; t < cfg.trials; ++t) tasks.push_back({a, n, d, t});
      }
    }
  }
  std::vector<TrialOut> outs(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
      const Task& t = tasks[k];
      outs[k] = run_trial(cfg, t.algo, t.n, t.d, t.trial);
    }
  };
  const int threads = std::min<int>(cfg.threads, static_cast<int>(tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult res;
  for (const auto& o : outs) {
    res.records.push_back(o.rec);
    res.wall_ms.push_back(o.wall_ms);
  }
  res.table.cells = aggregate(res.records);
  // Reference columns and capacity flags by cell, tasks being cell-major.
  for (std::size_t c = 0; c < res.table.cells.size(); ++c) {
    CellSummary& cell = res.table.cells[c];
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialOut& o = outs[c * cfg.trials + t];
      cell.capacity = cell.capacity || o.capacity;
      cell.ref_find_relevant = std::max(cell.ref_find_relevant, o.refs.find_relevant);
      cell.ref_learn_mp = std::max(cell.ref_learn_mp, o.refs.learn_mp);
      cell.ref_var_id = std::max(cell.ref_var_id, o.refs.var_id);
      cell.ref_violations += o.refs.violated;
    }
    const double thr = cfg.success_threshold.count(parse_algo(cell.algo))
                           ? cfg.success_threshold.at(parse_algo(cell.algo))
                           : 1.0;
    cell.meets_threshold =
        cell.capacity || cell.successes >= std::ceil(thr * cell.trials - 1e-9);
  }
  res.table.records_checksum = fnv1a(records_to_csv(res.records));
  return res;
}

bool ExperimentResult::all_cells_pass() const {
  return std::all_of(table.cells.begin(), table.cells.end(),
                     [](const CellSummary& c) { return c.meets_threshold; });
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
  if (!cfg.csv_path.empty()) {
    write_file(cfg.csv_path, records_to_csv(res.records));
    std::ostringstream t;
    t << "algo,n,d,trial,wall_ms\n";
    for (std::size_t k = 0; k < res.records.size(); ++k) {
      const Record& r = res.records[k];
      t << r.algo << ',' << r.n << ',' << r.d << ',' << r.trial << ',' << std::fixed
        << std::setprecision(3) << res.wall_ms[k] << '\n';
    }
    write_file(cfg.csv_path + ".timing", t.str());
  }
  if (!cfg.table_path.empty()) {
    std::ostringstream t;
    write_table(t, res.table);
    write_file(cfg.table_path, t.str());
  }
  if (!cfg.plot_dir.empty() && !res.records.empty()) emit_plots(res.records, cfg.plot_dir);
}

// ---------------------------------------------------------------------------

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {
constexpr const char* kCsvHeader =
    "algo,n,d,seed,trial,success,raw_queries,dedup_queries,phase_design,phase_binary,"
    "phase_interp,phase_km,phase_var_id,runtime_ms";
}

std::string records_to_csv(const std::vector<Record>& records) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const Record& r : records) {
    out << r.algo << ',' << r.n << ',' << r.d << ',' << r.seed << ',' << r.trial << ','
        << (r.success ? 1 : 0) << ',' << r.raw_queries << ',' << r.dedup_queries << ','
        << r.phases.design << ',' << r.phases.binary << ',' << r.phases.interp << ','
        << r.phases.km << ',' << r.phases.var_id << ',' << fmt(r.runtime_ms) << '\n';
  }
  return out.str();
}

std::vector<Record> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw FormatError("records CSV header mismatch");
  }
  std::vector<Record> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 14) throw FormatError("records CSV line " + std::to_string(lineno));
    try {
      Record r;
      r.algo = f[0];
      r.n = std::stoi(f[1]);
      r.d = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      r.trial = std::stoi(f[4]);
      r.success = f[5] == "1";
      r.raw_queries = std::stoull(f[6]);
      r.dedup_queries = std::stoull(f[7]);
      r.phases = {std::stoull(f[8]), std::stoull(f[9]), std::stoull(f[10]),
                  std::stoull(f[11]), std::stoull(f[12])};
      r.runtime_ms = std::stod(f[13]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw FormatError("records CSV line " + std::to_string(lineno));
    }
  }
  return out;
}

std::vector<CellSummary> aggregate(const std::vector<Record>& records) {
  std::vector<CellSummary> cells;
  std::map<std::tuple<std::string, int, int>, std::size_t> index;
  for (const Record& r : records) {
    auto key = std::make_tuple(r.algo, r.n, r.d);
    auto [it, fresh] = index.try_emplace(key, cells.size());
    if (fresh) {
      CellSummary c;
      c.algo = r.algo;
      c.n = r.n;
      c.d = r.d;
      cells.push_back(c);
    }
    CellSummary& c = cells[it->second];
    ++c.trials;
    c.successes += r.success;
    c.mean_raw += static_cast<double>(r.raw_queries);
    c.mean_dedup += static_cast<double>(r.dedup_queries);
    c.max_raw = std::max(c.max_raw, r.raw_queries);
    c.max_dedup = std::max(c.max_dedup, r.dedup_queries);
  }
  for (CellSummary& c : cells) {
    c.mean_raw /= c.trials;
    c.mean_dedup /= c.trials;
  }
  return cells;
}

void write_table(std::ostream& out, const BoundTable& table) {
  char sum[32];
  std::snprintf(sum, sizeof sum, "%016llx",
                static_cast<unsigned long long>(table.records_checksum));
  out << "# records_checksum fnv1a64 " << sum << '\n'
      << "# ref_* evaluate the bound expressions on realized design sizes (worst run);\n"
      << "# the asymptotic query bounds themselves are not reproduced.\n"
      << "algo n d trials successes status mean_raw max_raw mean_dedup max_dedup "
         "ref_find_relevant ref_learn_mp ref_var_id ref_violations threshold_met\n";
  for (const CellSummary& c : table.cells) {
    out << c.algo << ' ' << c.n << ' ' << c.d << ' ' << c.trials << ' ' << c.successes << ' '
        << (c.capacity ? "capacity" : "ok") << ' ' << fmt(c.mean_raw) << ' ' << c.max_raw << ' '
        << fmt(c.mean_dedup) << ' ' << c.max_dedup << ' ' << fmt(c.ref_find_relevant) << ' '
        << fmt(c.ref_learn_mp) << ' ' << fmt(c.ref_var_id) << ' ' << c.ref_violations << ' '
        << (c.meets_threshold ? "yes" : "no") << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Series {
  std::string algo;
  // x -> (sum of raw queries, runs, failures)
  std::map<int, std::tuple<double, int, int>> points;
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

// One chart: log10 y; x on log2 scale when log_x, else linear.
std::string svg_chart(const std::vector<Series>& series, const std::string& xlabel,
                      bool log_x) {
  const double W = 640, H = 420, L = 70, R = 150, T = 30, B = 50;
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  auto xv = [&](int x) { return log_x ? std::log2(std::max(x, 1)) : static_cast<double>(x); };
  for (const auto& s : series) {
    for (const auto& [x, p] : s.points) {
      const double y = std::log10(std::max(1.0, std::get<0>(p) / std::get<1>(p)));
      xlo = std::min(xlo, xv(x));
      xhi = std::max(xhi, xv(x));
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  if (xhi - xlo < 1e-9) {
    xlo -= 1;
    xhi += 1;
  }
  ylo = std::floor(ylo);
  yhi = std::max(std::ceil(yhi), ylo + 1);
  auto px = [&](double x) { return L + (x - xlo) / (xhi - xlo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ylo) / (yhi - ylo) * (H - T - B); };

  std::ostringstream o;
  o << std::fixed << std::setprecision(1);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (double y = ylo; y <= yhi + 1e-9; y += 1) {
    o << "<line x1=\"" << L - 4 << "\" y1=\"" << py(y) << "\" x2=\"" << W - R << "\" y2=\""
      << py(y) << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << L - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">1e"
      << static_cast<int>(y) << "</text>\n";
  }
  std::set<int> xs;
  for (const auto& s : series) {
    for (const auto& [x, p] : s.points) xs.insert(x);
  }
  for (int x : xs) {
    o << "<text x=\"" << px(xv(x)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << x
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << xlabel << (log_x ? " (log scale)" : "") << "</text>\n"
    << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">mean raw queries (log scale)</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 5];
    std::ostringstream pts;
    pts << std::fixed << std::setprecision(1);
    for (const auto& [x, p] : s.points) {
      const double y = std::log10(std::max(1.0, std::get<0>(p) / std::get<1>(p)));
      pts << px(xv(x)) << ',' << py(y) << ' ';
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
      << pts.str() << "\"/>\n";
    for (const auto& [x, p] : s.points) {
      const auto [sum, runs, fails] = p;
      const double y = std::log10(std::max(1.0, sum / runs));
      o << "<circle cx=\"" << px(xv(x)) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\""
        << color << "\"/>\n";
      if (fails > 0) {
        o << "<text x=\"" << px(xv(x)) + 6 << "\" y=\"" << py(y) - 6 << "\" fill=\"" << color
          << "\" font-size=\"10\">fail " << fails << "/" << runs << "</text>\n";
      }
    }
    const double ly = T + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 35
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\">" << s.algo << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<Series> group(const std::vector<Record>& records, bool by_n) {
  std::vector<Series> out;
  for (const Record& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Series& s) { return s.algo == r.algo; });
    if (it == out.end()) {
      out.push_back({r.algo, {}});
      it = std::prev(out.end());
    }
    auto& [sum, runs, fails] = it->points[by_n ? r.n : r.d];
    sum += static_cast<double>(r.raw_queries);
    ++runs;
    fails += !r.success;
  }
  return out;
}

}  // namespace

std::vector<std::string> emit_plots(const std::vector<Record>& records, const std::string& dir) {
  if (records.empty()) throw ValidationError("emit_plots needs at least one record");
  std::filesystem::create_directories(dir);
  const std::string a = (std::filesystem::path(dir) / "queries_vs_n.svg").string();
  const std::string b = (std::filesystem::path(dir) / "queries_vs_d.svg").string();
  write_file(a, svg_chart(group(records, true), "n", true));
  write_file(b, svg_chart(group(records, false), "d", false));
  return {a, b};
}

}  // namespace dtl
