// Acceptance checks, one per criterion. `acceptance c3` runs one check,
// `acceptance all` runs every check. Each prints a single PASS/FAIL line and
// the exit code is nonzero if any selected check fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "dtlearn/designs.hpp"
#include "dtlearn/fourier.hpp"
#include "dtlearn/harness.hpp"
#include "dtlearn/learners.hpp"

using namespace dtl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

bool report(const char* id, const char* title, const Outcome& o) {
  std::printf("[%s] %s %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

constexpr uint64_t kSeed = 20240601;
const int kNs[] = {16, 32, 64};

// Deterministic learner on 200 targets per (n, d) in {16,32,64} x {1..4}.
Outcome c1() {
  const auto t0 = Clock::now();
  int runs = 0, exact = 0;
  for (int n : kNs) {
    for (int d = 1; d <= 4; ++d) {
      for (int t = 0; t < 200; ++t) {
        const auto tree = instance_tree(kSeed, n, d, t);
        MembershipOracle o(tree);
        const auto r = deterministic_learn(o, n, d);
        ++runs;
        exact += r.h.to_mp() == dt_to_mp(tree);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {exact == runs && secs <= 600,
          format("%d/%d canonical matches, %.1f s (limit 600 s)", exact, runs, secs)};
}

// Find-Relevant on the same targets: exact set, invocation and query ceilings.
Outcome c2() {
  int runs = 0, wrong_set = 0, too_many_inv = 0, long_inv = 0, over_total = 0;
  for (int n : kNs) {
    const int logn = ceil_log2(static_cast<uint64_t>(n));
    for (int d = 1; d <= 4; ++d) {
      for (int t = 0; t < 200; ++t) {
        const auto tree = instance_tree(kSeed, n, d, t);
        MembershipOracle o(tree);
        FindRelevantStats st;
        const auto R = find_relevant(o, n, d, &st);
        const auto truth = dt_to_mp(tree).support();
        const auto V = static_cast<uint64_t>(truth.size());
        ++runs;
        wrong_set += R.vars != truth;
        too_many_inv += static_cast<uint64_t>(st.invocations) > V;
        long_inv += st.max_invocation_queries > static_cast<uint64_t>(logn);
        over_total += o.raw_count() > 2 * st.design_size + V * logn;
        for (const auto& [v, w] : R.witnesses) {
          if (tree.eval(w.first) == tree.eval(w.second)) ++wrong_set;
        }
      }
    }
  }
  return {wrong_set + too_many_inv + long_inv + over_total == 0,
          format("%d runs; wrong set %d, invocations > V %d, invocation > ceil(log n) %d, "
                 "total > 2|S|+V ceil(log n) %d",
                 runs, wrong_set, too_many_inv, long_inv, over_total)};
}

// Learn-Monomial on 1000 random MP_{d,s} targets.
Outcome c3() {
  Rng rng(kSeed + 3);
  int not_member = 0, shrink_bad = 0, shrinks = 0, iter_bad = 0, targets_with_bad = 0;
  std::map<int, int> bad_by_d;
  std::map<int, BinaryDesign> zt;
  for (int k = 0; k < 1000; ++k) {
    const int N = 1 + static_cast<int>(rng() % 16);
    const int d = 1 + static_cast<int>(rng() % std::min(N, 4));
    const int cap = static_cast<int>(std::pow(3, d));
    const auto s = static_cast<std::size_t>(1 + rng() % cap);
    const auto p = random_mp(N, d, s, rng);
    const int key = N * 8 + d;
    if (!zt.count(key)) zt.emplace(key, zero_test_set(N, d));
    FunctionOracle g(N, [&](const Assignment& a) { return eval_mp(p, a); });
    LearnMonomialStats st;
    const auto M = learn_monomial(g, N, d, zt.at(key), &st);
    if (p.is_zero() ? M.has_value() : !(M && p.contains(*M))) ++not_member;
    if (st.iterations > learn_monomial_iteration_bound(N, d)) ++iter_bad;
    bool bad = false;
    for (const auto& [wb, wab] : st.shrinks) {
      ++shrinks;
      if (wab > wb * (1.0 - 1.0 / (2.0 * d)) + 1e-9) {
        ++shrink_bad;
        bad = true;
      }
    }
    if (bad) {
      ++targets_with_bad;
      ++bad_by_d[d];
    }
  }
  std::string by_d;
  for (const auto& [d, c] : bad_by_d) by_d += format(" d=%d:%d", d, c);
  return {not_member + shrink_bad + iter_bad == 0,
          format("1000 targets; non-member %d, iteration bound exceeded %d, "
                 "shrink inequality violated %d/%d shrinks on %d targets (by d:%s)",
                 not_member, iter_bad, shrink_bad, shrinks, targets_with_bad,
                 by_d.empty() ? " none" : by_d.c_str())};
}

// Exhaustive design verification.
Outcome c4() {
  int uds = 0, uds_bad = 0;
  for (int d = 1; d <= 3; ++d) {
    for (int n = d; n <= 16; ++n) {
      const auto s = universal_disjoint_set(n, d);
      ++uds;
      uds_bad += !verify_uds(s, d).pass;
    }
  }
  int saos = 0, saos_size = 0, saos_weight = 0, saos_cover = 0;
  std::string first_weight;
  for (int d = 1; d <= 8; ++d) {
    for (int n = d + 1; n <= 200; ++n) {
      const auto D = sparse_all_one_set(n, d);
      const auto r = verify_saos(D, d);
      ++saos;
      saos_size += D.size() != static_cast<std::size_t>(d + 1);
      saos_cover += r.detail.find("coverage FAIL") != std::string::npos;
      if (r.detail.find("weight") != std::string::npos &&
          r.measured > n * (1.0 - 1.0 / (2.0 * d)) + 1e-9) {
        if (++saos_weight == 1) {
          first_weight = format("n=%d d=%d weight %d > %.3f", n, d,
                                static_cast<int>(r.measured), n * (1.0 - 1.0 / (2.0 * d)));
        }
      }
    }
  }
  int kw = 0, kw_bad = 0;
  for (int d = 1; d <= 4; ++d) {
    for (int n = d; n <= 8; ++n) {
      ++kw;
      kw_bad += !verify_kwise(kwise_space(n, d), d).pass;
    }
  }
  int cb = 0, cb_bad = 0;
  for (double lam : {1.0 / 16, 1.0 / 256}) {
    for (int m = 2; m <= 12; ++m) {
      for (int w = 1; w <= std::min(m - 1, 4); ++w) {
        const auto M = kwise_matrix(m, w);
        const auto S = compose_biased(M, biased_set(M.m, lam));
        ++cb;
        cb_bad += !verify_bias(S, w, lam).pass;
      }
    }
  }
  const int bad = uds_bad + saos_size + saos_weight + saos_cover + kw_bad + cb_bad;
  return {bad == 0,
          format("uds %d/%d; sparse all-one %d designs: size %d, weight %d (first: %s), "
                 "coverage %d violations; kwise %d/%d; composed bias %d/%d",
                 uds - uds_bad, uds, saos, saos_size, saos_weight,
                 first_weight.empty() ? "none" : first_weight.c_str(), saos_cover,
                 kw - kw_bad, kw, cb - cb_bad, cb)};
}

// Fourier invariants on 500 trees plus the two-variable AND example.
Outcome c5() {
  Rng rng(kSeed + 5);
  int bad = 0, oracle_bad = 0;
  for (int k = 0; k < 500; ++k) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const int d = std::min(n, 1 + static_cast<int>(rng() % 4));
    const auto t = random_tree(n, d, rng);
    const auto f = dt_to_dft(t);
    bool ok = f.sum_squares() == Dyadic(1) && f.coeffs.size() <= (std::size_t{1} << (2 * d)) &&
              f.l1() <= Dyadic(int64_t{1} << d);
    for (const auto& [a, c] : f.coeffs) {
      ok = ok && a.weight() <= d && c.log_den() <= d;
      // Direct transform of g = 1 - 2f at the listed index. Together with
      // Parseval this pins the whole spectrum.
      int64_t acc = 0;
      for (uint64_t x = 0; x < (uint64_t{1} << n); ++x) {
        const auto xa = Assignment::from_word(n, x);
        const int g = t.eval(xa) ? -1 : 1;
        acc += parity(a, xa) ? -g : g;
      }
      if (Dyadic(acc) != c * Dyadic(int64_t{1} << n)) ++oracle_bad;
    }
    bad += !ok;
  }
  // f = x2 x3 on four variables, as a 0/1 function.
  const auto ex = term_dft(4, {{2, true}, {3, true}});
  auto at = [&](const char* s) {
    Assignment a(4);
    for (int i = 0; i < 4; ++i) a.set(i + 1, s[i] == '1');
    return ex.at(a);
  };
  const bool example = ex.coeffs.size() == 4 && at("0000") == Dyadic(1, 2) &&
                       at("0100") == -Dyadic(1, 2) && at("0010") == -Dyadic(1, 2) &&
                       at("0110") == Dyadic(1, 2);
  return {bad + oracle_bad == 0 && example,
          format("500 trees; invariant failures %d, coefficient mismatches vs direct transform "
                 "%d; x2x3 example %s",
                 bad, oracle_bad, example ? "exact" : "WRONG")};
}

// KM with exact and sampled estimators.
Outcome c6() {
  const auto t0 = Clock::now();
  Rng rng(kSeed + 6);
  int exact_bad = 0, level_bad = 0;
  for (int k = 0; k < 300; ++k) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const int d = std::min(n, 1 + static_cast<int>(rng() % 3));
    const auto t = random_tree(n, d, rng);
    MembershipOracle o(t);
    KmStats st;
    exact_bad += km_learn(o, n, d, {KmEstimator::Exact}, &st) != dt_to_dft(t);
    for (auto s : st.level_sizes) level_bad += s > (std::size_t{1} << (2 * d));
  }
  int ok = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng() % 15);
    const int d = 1 + k % 2;
    const auto t = random_tree(n, d, rng);
    MembershipOracle o(t);
    KmOptions opts;
    opts.delta = 0.05;
    opts.seed = rng();
    try {
      ok += km_learn(o, n, d, opts) == dt_to_dft(t);
    } catch (const InvariantError&) {
    }
  }
  const double secs = seconds_since(t0);
  return {exact_bad == 0 && level_bad == 0 && ok >= 93 && secs <= 300,
          format("exact: %d/300 mismatches, %d oversized levels; sampled: %d/100 exact "
                 "(need 93); %.1f s (limit 300 s)",
                 exact_bad, level_bad, ok, secs)};
}

// Deterministic F_alpha within the bias error bound.
Outcome c7() {
  const double lam = 1.0 / 256;
  Rng rng(kSeed + 7);
  int tested = 0, violations = 0;
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = 4 + static_cast<int>(rng() % 9);
    const int d = 2;
    const auto t = random_tree(n, d, rng);
    const auto f = dt_to_dft(t);
    const double l1 = f.l1().to_double();
    MembershipOracle o(t);
    for (int r = 1; r < n; ++r) {
      // Prefixes of the support plus every prefix of weight <= 1.
      std::set<Assignment> alphas;
      auto prefix = [&](const Assignment& a) {
        Assignment p(r);
        for (int i = 1; i <= r; ++i) p.set(i, a.get(i));
        return p;
      };
      for (const auto& [a, c] : f.coeffs) alphas.insert(prefix(a));
      alphas.insert(Assignment(r));
      for (int i = 1; i <= r; ++i) {
        Assignment a(r);
        a.set(i, true);
        alphas.insert(a);
      }
      const auto s2 = small_bias_design(n - r, std::min(n - r, 2 * d), lam);
      for (const auto& a : alphas) {
        const auto s1 = small_bias_design(r, std::min(r, a.weight() + d), lam);
        const double l1s = s1.bias ? s1.bias->lambda : 0;
        const double l2s = s2.bias ? s2.bias->lambda : 0;
        const double bound = f_alpha_error_bound(l1, std::max(l1s, 0.0), std::max(l2s, 0.0));
        const double err =
            std::fabs(f_alpha_deterministic(o, a, n, d, s1, s2) - f_alpha_exact(f, a).to_double());
        ++tested;
        worst = std::max(worst, err);
        violations += err > bound + 1e-12 || bound > f_alpha_error_bound(l1, lam, lam) + 1e-15;
      }
    }
  }
  return {violations == 0, format("%d prefixes over 50 trees; %d violations; worst error %.3g",
                                  tested, violations, worst)};
}

// Randomized reduction at n = 1024 and the projection collision rate.
Outcome c8() {
  const auto t0 = Clock::now();
  const int n = 1024;
  int ok = 0, var_bad = 0;
  for (int k = 0; k < 100; ++k) {
    const int d = 1 + k % 2;
    const auto t = instance_tree(kSeed + 8, n, d, k);
    MembershipOracle o(t);
    ReductionOptions opts;
    opts.delta = 1.0 / 16;
    opts.seed = trial_seed(kSeed, "c8", k);
    const auto r = randomized_reduction_learn(o, n, d, opts);
    ok += verify_hypothesis(r.h, t);
    const auto V = dt_to_mp(t).support().size();
    var_bad += r.report.phases.var_id > V * ceil_log2(n);
  }
  Rng rng(kSeed + 80);
  const int V = 8, m = 8 * V * V;
  int collisions = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto P = Projection::uniform(n, m, rng);
    std::set<int> images;
    for (int i = 1; i <= V; ++i) images.insert(P.map[i * 97 - 1]);
    collisions += images.size() < static_cast<std::size_t>(V);
  }
  const double rate = collisions / 10000.0;
  const double secs = seconds_since(t0);
  return {ok >= 70 && var_bad == 0 && rate <= 1.0 / 16 + 0.03 && secs <= 900,
          format("%d/100 exact (need 70); var-id over V ceil(log n) %d; collision rate %.4f "
                 "(limit %.4f); %.1f s (limit 900 s)",
                 ok, var_bad, rate, 1.0 / 16 + 0.03, secs)};
}

// A bench cell rerun yields byte-identical records and table.
Outcome c9() {
  const auto cfg = parse_config(R"({
    "algos": ["det", "rand", "km"], "n": [16, 32], "d": [1, 2],
    "trials": 3, "seed": 99, "delta": 0.0625
  })");
  auto once = [](ExperimentConfig c) {
    const auto res = run_experiment(c);
    std::ostringstream t;
    write_table(t, res.table);
    return std::make_pair(records_to_csv(res.records), t.str());
  };
  const auto a = once(cfg);
  const auto b = once(cfg);
  auto par = cfg;
  par.threads = 3;
  const auto c = once(par);
  const bool same = a == b && a == c;
  return {same, format("%zu-byte CSV, reruns %s, threaded rerun %s", a.first.size(),
                       a == b ? "identical" : "DIFFER", a == c ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::tuple<std::string, const char*, std::function<Outcome()>>> checks{
      {"c1", "deterministic exactness", c1}, {"c2", "find-relevant", c2},
      {"c3", "learn-monomial", c3},          {"c4", "designs", c4},
      {"c5", "fourier invariants", c5},      {"c6", "KM", c6},
      {"c7", "deterministic F_alpha", c7},   {"c8", "randomized reduction", c8},
      {"c9", "reproducibility", c9}};
  std::set<std::string> want;
  for (int i = 1; i < argc; ++i) want.insert(argv[i]);
  if (want.empty()) want.insert("all");
  bool all_pass = true;
  int ran = 0;
  for (const auto& [id, title, fn] : checks) {
    if (!want.count("all") && !want.count(id)) continue;
    ++ran;
    std::string upper = id;
    upper[0] = 'C';
    try {
      all_pass = report(upper.c_str(), title, fn()) && all_pass;
    } catch (const std::exception& e) {
      all_pass = report(upper.c_str(), title, {false, std::string("exception: ") + e.what()}) &&
                 all_pass;
    }
  }
  if (ran == 0) {
    std::fprintf(stderr, "usage: acceptance [all|c1..c9]...\n");
    return 2;
  }
  return all_pass ? 0 : 1;
}
