// Command-line front end: tree generation, single runs, benchmarks, designs,
// KM transforms and plotting.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "dtlearn/designs.hpp"
#include "dtlearn/fourier.hpp"
#include "dtlearn/harness.hpp"
#include "dtlearn/learners.hpp"

using namespace dtl;

namespace {

// Writes to path, or stdout for "" / "-".
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  fn(out);
}

int cmd_gen(int n, int d, uint64_t seed, double leaf_bias, const std::string& out) {
  Rng rng(seed);
  const auto t = random_tree(n, d, rng, leaf_bias);
  emit(out, [&](std::ostream& o) { o << tree_to_json(t, 2) << '\n'; });
  return 0;
}

int cmd_run(const std::string& algo_s, const std::string& tree_path, double delta, uint64_t seed,
            const std::string& report_path, int d_opt) {
  const auto tree = load_tree(tree_path);
  const int n = tree.n();
  const int d = d_opt >= 0 ? d_opt : tree.depth();
  MembershipOracle o(tree);
  LearnResult r;
  switch (parse_algo(algo_s)) {
    case Algo::Det:
      r = deterministic_learn(o, n, d);
      break;
    case Algo::Rand: {
      ReductionOptions ro;
      ro.delta = delta;
      ro.seed = seed;
      r = randomized_reduction_learn(o, n, d, ro);
      break;
    }
    case Algo::Km:
      r = km_direct_learn(o, n, d, delta, seed);
      break;
  }
  r.report.success = verify_hypothesis(r.h, tree);
  emit(report_path, [&](std::ostream& out) { write_report(out, r.report); });
  return r.report.success ? 0 : 1;
}

int cmd_bench(const std::string& config, const std::string& csv, const std::string& table,
              const std::string& plots, int threads) {
  auto cfg = load_config(config);
  if (!csv.empty()) cfg.csv_path = csv;
  if (!table.empty()) cfg.table_path = table;
  if (!plots.empty()) cfg.plot_dir = plots;
  if (threads > 0) cfg.threads = threads;
  const auto res = run_experiment(cfg);
  write_outputs(cfg, res);
  write_table(std::cout, res.table);
  return res.all_cells_pass() ? 0 : 1;
}

int cmd_designs(const std::string& kind_s, int n, int d, int q, double lambda, uint64_t seed,
                bool verify, const std::string& out) {
  const DesignKind kind = parse_design_kind(kind_s);
  AnyDesign design;
  switch (kind) {
    case DesignKind::Uds:
      design = universal_disjoint_set(n, d);
      break;
    case DesignKind::Saos:
      design = sparse_all_one_set(n, d);
      break;
    case DesignKind::ZeroTest:
      design = zero_test_set(n, d);
      break;
    case DesignKind::Phf: {
      Rng rng(seed);
      design = perfect_hash_family(n, q > 0 ? q : d * d, d, rng);
      break;
    }
    case DesignKind::Universal:
      design = universal_set(n, d, UniversalBackend::Auto, seed);
      break;
    case DesignKind::Kwise:
      design = kwise_space(n, d);
      break;
    case DesignKind::Biased:
      design = biased_set(n, lambda);
      break;
  }
  emit(out, [&](std::ostream& o) { write_design(o, design); });
  if (!verify) return 0;
  VerifyParams vp;
  vp.d = d;
  vp.lambda = lambda;
  const auto rep = verify_design(design, kind, vp);
  std::cerr << report_to_text(rep, kind);
  return rep.pass ? 0 : 1;
}

int cmd_km(const std::string& tree_path, const std::string& est, double delta, uint64_t seed,
           int d_opt, const std::string& out) {
  const auto tree = load_tree(tree_path);
  const int d = d_opt >= 0 ? d_opt : tree.depth();
  KmOptions opts;
  opts.estimator = parse_km_estimator(est);
  opts.delta = delta;
  opts.seed = seed;
  MembershipOracle o(tree);
  const auto dft = km_learn(o, tree.n(), d, opts);
  emit(out, [&](std::ostream& o2) { write_dft(o2, dft); });
  std::cerr << "queries: " << o.raw_count() << " distinct: " << o.dedup_count()
            << " exact: " << (dft == dt_to_dft(tree) ? "yes" : "no") << '\n';
  return 0;
}

int cmd_plot(const std::string& csv, const std::string& dir) {
  std::ifstream in(csv);
  if (!in) throw ValidationError("cannot read " + csv);
  std::ostringstream s;
  s << in.rdbuf();
  for (const auto& p : emit_plots(records_from_csv(s.str()), dir)) std::cout << p << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact decision-tree learning from membership queries"};
  app.require_subcommand(1);
  int rc = 0;

  int n = 16, d = 2, q = 0, threads = 0, d_opt = -1;
  uint64_t seed = 1;
  double delta = 1.0 / 16, lambda = 1.0 / 256, leaf_bias = 0.25;
  bool verify = false;
  std::string out, tree, algo = "det", report, config, csv, table, plots, kind, est = "sampled";

  auto* gen = app.add_subcommand("gen", "Random decision tree as JSON");
  gen->add_option("--n", n)->required();
  gen->add_option("--d", d)->required();
  gen->add_option("--seed", seed);
  gen->add_option("--leaf-bias", leaf_bias);
  gen->add_option("--out", out);
  gen->callback([&] { rc = cmd_gen(n, d, seed, leaf_bias, out); });

  auto* run = app.add_subcommand("run", "Learn one tree and write a run report");
  run->add_option("--algo", algo)->check(CLI::IsMember({"det", "rand", "km"}));
  run->add_option("--tree", tree)->required();
  run->add_option("--d", d_opt, "Depth bound (default: tree depth)");
  run->add_option("--delta", delta);
  run->add_option("--seed", seed);
  run->add_option("--report", report);
  run->callback([&] { rc = cmd_run(algo, tree, delta, seed, report, d_opt); });

  auto* bench = app.add_subcommand("bench", "Run an experiment grid from a JSON config");
  bench->add_option("--config", config)->required();
  bench->add_option("--csv", csv);
  bench->add_option("--table", table);
  bench->add_option("--plots", plots);
  bench->add_option("--threads", threads);
  bench->callback([&] { rc = cmd_bench(config, csv, table, plots, threads); });

  auto* des = app.add_subcommand("designs", "Build (and optionally verify) a design");
  des->add_option("--kind", kind)
      ->required()
      ->check(CLI::IsMember({"uds", "saos", "zerotest", "phf", "universal", "kwise", "biased"}));
  des->add_option("--n", n)->required();
  des->add_option("--d", d);
  des->add_option("--q", q);
  des->add_option("--lambda", lambda);
  des->add_option("--seed", seed);
  des->add_flag("--verify", verify);
  des->add_option("--out", out);
  des->callback([&] { rc = cmd_designs(kind, n, d, q, lambda, seed, verify, out); });

  auto* km = app.add_subcommand("km", "Fourier coefficients of a tree via KM");
  km->add_option("--tree", tree)->required();
  km->add_option("--estimator", est)->check(CLI::IsMember({"exact", "sampled", "det"}));
  km->add_option("--d", d_opt, "Depth bound (default: tree depth)");
  km->add_option("--delta", delta);
  km->add_option("--seed", seed);
  km->add_option("--out", out);
  km->callback([&] { rc = cmd_km(tree, est, delta, seed, d_opt, out); });

  auto* plot = app.add_subcommand("plot", "SVG charts from a records CSV");
  plot->add_option("--csv", csv)->required();
  plot->add_option("--out", out, "Output directory")->required();
  plot->callback([&] { rc = cmd_plot(csv, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return rc;
}
