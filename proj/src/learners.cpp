#include "dtlearn/learners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>

namespace dtl {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Local N-bit queries written into the named coordinates of an n-bit point,
// every other coordinate zero.
class EmbeddedOracle final : public Oracle {
 public:
  EmbeddedOracle(MembershipOracle& base, const std::vector<int>& names)
      : base_(base), names_(names) {}
  int arity() const override { return static_cast<int>(names_.size()); }
  bool ask(const Assignment& a) override {
    Assignment p(base_.arity());
    for (int k : a.ones()) p.set(names_[k - 1], true);
    return base_.query(p);
  }

 private:
  MembershipOracle& base_;
  const std::vector<int>& names_;
};

// f at b(x): b_i = xi + x_i on the fiber of y_l, b_i = a_{P(i)} elsewhere.
class TemplateOracle final : public Oracle {
 public:
  TemplateOracle(MembershipOracle& base, const Projection& p, const Assignment& a,
                 int l, bool xi)
      : base_(base), p_(p), a_(a), l_(l), xi_(xi) {}
  int arity() const override { return p_.n; }
  bool ask(const Assignment& x) override {
    Assignment b(p_.n);
    for (int i = 1; i <= p_.n; ++i) {
      const int j = p_.map[i - 1];
      b.set(i, j == l_ ? (xi_ != x.get(i)) : a_.get(j));
    }
    return base_.query(b);
  }

 private:
  MembershipOracle& base_;
  const Projection& p_;
  const Assignment& a_;
  int l_;
  bool xi_;
};

// The DFT rewritten over its support variables only.
std::pair<SparseDFT, std::vector<int>> compress(const SparseDFT& dft) {
  Assignment support(dft.n);
  for (const auto& [a, c] : dft.coeffs) support |= a;
  std::vector<int> vars = support.ones();
  SparseDFT out;
  out.n = static_cast<int>(vars.size());
  out.d = dft.d;
  for (const auto& [a, c] : dft.coeffs) {
    Assignment local(out.n);
    for (int k = 0; k < out.n; ++k) {
      if (a.get(vars[k])) local.set(k + 1, true);
    }
    out.add(local, c);
  }
  return {out, vars};
}

// Oracle counters when a run starts, so a reused oracle reports per run.
struct Start {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  uint64_t raw = 0;
  uint64_t dedup = 0;
  explicit Start(const MembershipOracle& f) : raw(f.raw_count()), dedup(f.dedup_count()) {}
};

void finish(RunReport& rep, const MembershipOracle& f, const Start& st) {
  rep.raw_queries = f.raw_count() - st.raw;
  rep.dedup_queries = f.dedup_count() - st.dedup;
  rep.wall_ms = elapsed_ms(st.t0);
  if (rep.phases.total() != rep.raw_queries) {
    throw InvariantError("phase counts do not sum to the raw query count");
  }
}

Hypothesis dft_hypothesis(int n, SparseDFT local, std::vector<int> names) {
  Hypothesis h;
  h.form = HypothesisForm::Dft;
  h.n = n;
  h.dft = std::move(local);
  h.names = std::move(names);
  return h;
}

}  // namespace

bool Hypothesis::eval(const Assignment& x) const {
  if (x.size() != n) throw DimensionError("hypothesis arity != n");
  Assignment local(local_arity());
  for (int k = 0; k < local_arity(); ++k) {
    if (x.get(names[k])) local.set(k + 1, true);
  }
  return form == HypothesisForm::Mp ? eval_mp(mp, local) : eval_dft_bool(dft, local);
}

MultivariatePoly Hypothesis::to_mp() const {
  std::vector<int> U = names;
  std::sort(U.begin(), U.end());
  U.erase(std::unique(U.begin(), U.end()), U.end());
  if (form == HypothesisForm::Mp && U.size() == names.size()) {
    return rename_mp(mp, names, n);
  }
  if (U.size() > 20) throw CapacityError("hypothesis has more than 20 distinct variables");
  // Truth table over the distinct originals, then the Moebius transform.
  const int u = static_cast<int>(U.size());
  std::vector<int> slot(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    slot[k] = static_cast<int>(std::lower_bound(U.begin(), U.end(), names[k]) - U.begin());
  }
  std::vector<uint8_t> t(std::size_t{1} << u);
  for (uint64_t w = 0; w < t.size(); ++w) {
    Assignment local(local_arity());
    for (std::size_t k = 0; k < names.size(); ++k) {
      if ((w >> slot[k]) & 1) local.set(static_cast<int>(k) + 1, true);
    }
    t[w] = form == HypothesisForm::Mp ? eval_mp(mp, local) : eval_dft_bool(dft, local);
  }
  for (std::size_t h = 1; h < t.size(); h <<= 1) {
    for (std::size_t w = 0; w < t.size(); ++w) {
      if (w & h) t[w] ^= t[w ^ h];
    }
  }
  MultivariatePoly out(n);
  for (uint64_t w = 0; w < t.size(); ++w) {
    if (!t[w]) continue;
    std::vector<int> v;
    for (int b = 0; b < u; ++b) {
      if ((w >> b) & 1) v.push_back(U[b]);
    }
    out.toggle(Monomial(std::move(v)));
  }
  return out;
}

void write_report(std::ostream& out, const RunReport& r) {
  out << "algo: " << r.algo << '\n'
      << "n: " << r.n << '\n'
      << "d: " << r.d << '\n'
      << "seed: " << r.seed << '\n'
      << "success: " << (r.success ? 1 : 0) << '\n'
      << "raw_queries: " << r.raw_queries << '\n'
      << "dedup_queries: " << r.dedup_queries << '\n'
      << "phase_design: " << r.phases.design << '\n'
      << "phase_binary: " << r.phases.binary << '\n'
      << "phase_interp: " << r.phases.interp << '\n'
      << "phase_km: " << r.phases.km << '\n'
      << "phase_var_id: " << r.phases.var_id << '\n'
      << "wall_ms: " << r.wall_ms << '\n';
  for (const auto& [k, v] : r.extra) out << k << ": " << v << '\n';
}

// ---------------------------------------------------------------------------

LearnResult deterministic_learn(MembershipOracle& f, int n, int d) {
  if (f.arity() != n) throw DimensionError("deterministic_learn arity != n");
  if (d < 0 || d > 20) throw ParameterError("deterministic_learn needs 0 <= d <= 20");
  const Start start(f);
  LearnResult out;
  RunReport& rep = out.report;
  rep.algo = "det";
  rep.n = n;
  rep.d = d;

  FindRelevantStats fr;
  RelevantSet R = find_relevant(f, n, d, &fr);
  rep.phases.design = fr.design_queries;
  rep.phases.binary = fr.binary_queries;
  const int N = static_cast<int>(R.vars.size());
  if (N > (1 << d)) {
    throw InvariantError(std::to_string(N) + " relevant variables exceed 2^d");
  }

  const uint64_t before = f.raw_count();
  EmbeddedOracle local(f, R.vars);
  LearnMpStats ms;
  const auto s = static_cast<std::size_t>(std::llround(std::pow(3.0, d)));
  MultivariatePoly p = learn_mp(local, N, std::min(d, N), s, &ms);
  rep.phases.interp = f.raw_count() - before;

  out.h.form = HypothesisForm::Mp;
  out.h.n = n;
  out.h.names = R.vars;
  out.h.mp = std::move(p);
  rep.note("relevant", N);
  rep.note("design_size", static_cast<double>(fr.design_size));
  rep.note("design_strength", fr.design_strength);
  rep.note("binary_invocations", fr.invocations);
  rep.note("max_invocation_queries", static_cast<double>(fr.max_invocation_queries));
  rep.note("zero_test_size", static_cast<double>(ms.zero_test_size));
  rep.note("zero_tests", static_cast<double>(ms.zero_tests));
  rep.note("monomials", static_cast<double>(out.h.mp.size()));
  finish(rep, f, start);
  return out;
}

LearnResult randomized_reduction_learn(MembershipOracle& f, int n, int d,
                                       const ReductionOptions& opts) {
  if (f.arity() != n) throw DimensionError("randomized_reduction_learn arity != n");
  if (d < 0 || d > 6) throw ParameterError("randomized_reduction_learn needs 0 <= d <= 6");
  const Start start(f);
  LearnResult out;
  RunReport& rep = out.report;
  rep.algo = "rand";
  rep.n = n;
  rep.d = d;
  rep.seed = opts.seed;

  const int V = 1 << d;
  const int m = 8 * V * V;
  Rng rng(opts.seed);
  const Projection P = Projection::uniform(n, m, rng);
  ProjectedOracle g(f, P, opts.check_translation);

  KmOptions ko;
  ko.estimator = KmEstimator::Sampled;
  ko.delta = opts.delta;
  ko.seed = rng();
  KmStats ks;
  SparseDFT dft;
  bool km_failed = false;
  try {
    dft = km_learn(g, m, d, ko, &ks);
  } catch (const InvariantError&) {
    km_failed = true;
    dft = SparseDFT{m, d, {{Assignment(m), Dyadic(1)}}};
  }
  rep.phases.km = f.raw_count() - start.raw;

  RelevantSet Y = find_witnesses(dft);
  std::vector<int> names;
  int id_failures = 0;
  for (int l : Y.vars) {
    const Assignment& a = Y.witnesses.at(l).first;  // a_l = 1
    const bool xi = !eval_dft_bool(dft, a);
    TemplateOracle T(f, P, a, l, xi);
    int k = 0;
    try {
      k = learn_variable_nonadaptive(T, n);
    } catch (const ContractError&) {
      ++id_failures;
      k = P.preimage(l).empty() ? 1 : P.preimage(l).front();
    }
    names.push_back(k);
  }
  rep.phases.var_id = f.raw_count() - start.raw - rep.phases.km;

  auto [local, vars] = compress(dft);
  (void)vars;  // equal to Y.vars: both are the coefficient support
  out.h = dft_hypothesis(n, std::move(local), std::move(names));
  std::size_t max_level = 0;
  for (auto s : ks.level_sizes) max_level = std::max(max_level, s);
  rep.note("m", m);
  rep.note("relevant_projected", static_cast<double>(Y.vars.size()));
  rep.note("km_max_level", static_cast<double>(max_level));
  rep.note("km_anomalies", static_cast<double>(ks.est.anomalies));
  rep.note("km_failed", km_failed ? 1 : 0);
  rep.note("var_id_failures", id_failures);
  rep.note("var_id_bound", static_cast<double>(Y.vars.size()) * ceil_log2(n));
  finish(rep, f, start);
  return out;
}

LearnResult km_direct_learn(MembershipOracle& f, int n, int d, double delta, uint64_t seed) {
  if (f.arity() != n) throw DimensionError("km_direct_learn arity != n");
  const Start start(f);
  LearnResult out;
  RunReport& rep = out.report;
  rep.algo = "km";
  rep.n = n;
  rep.d = d;
  rep.seed = seed;
  KmOptions ko;
  ko.delta = delta;
  ko.seed = seed;
  KmStats ks;
  SparseDFT dft;
  try {
    dft = km_learn(f, n, d, ko, &ks);
  } catch (const InvariantError&) {
    dft = SparseDFT{n, d, {{Assignment(n), Dyadic(1)}}};
    rep.note("km_failed", 1);
  }
  rep.phases.km = f.raw_count() - start.raw;
  auto [local, vars] = compress(dft);
  out.h = dft_hypothesis(n, std::move(local), std::move(vars));
  rep.note("km_anomalies", static_cast<double>(ks.est.anomalies));
  finish(rep, f, start);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Disagreement {
  Assignment a, b;
};

// g, with every query also asked at a_{y_i <- y_j}; stops the learner at the
// first disagreement. j = 0 substitutes the constant 0.
class CrossCheckOracle final : public Oracle {
 public:
  CrossCheckOracle(Oracle& g, int i, int j) : g_(g), i_(i), j_(j) {}
  int arity() const override { return g_.arity(); }
  bool ask(const Assignment& a) override {
    const bool v = g_.ask(a);
    Assignment b = a;
    b.set(i_, j_ == 0 ? false : a.get(j_));
    if (!(b == a) && g_.ask(b) != v) throw Disagreement{a, b};
    return v;
  }

 private:
  Oracle& g_;
  int i_, j_;
};

}  // namespace

RelevantSet witnesses_via_equivalence(Oracle& g, const BaseLearner& learner, int repeats,
                                      Rng& rng) {
  const int m = g.arity();
  RelevantSet R;
  for (int i = 1; i <= m; ++i) {
    const int j = i == 1 ? (m >= 2 ? 2 : 0) : 1;
    CrossCheckOracle cc(g, i, j);
    for (int rep = 0; rep < repeats; ++rep) {
      try {
        learner(cc, rng);
      } catch (const Disagreement& w) {
        Assignment hi = w.a, lo = w.a;
        hi.set(i, true);
        lo.set(i, false);
        R.add(i, std::move(hi), std::move(lo));
        break;
      } catch (const InvariantError&) {
        // the learner gave up on this run; try again
      }
    }
  }
  return R;
}

BaseLearner km_base_learner(int d, double delta) {
  return [d, delta](Oracle& o, Rng& rng) {
    KmOptions ko;
    ko.delta = delta;
    ko.seed = rng();
    km_learn(o, o.arity(), d, ko);
  };
}

bool verify_hypothesis(const Hypothesis& h, const DecisionTree& target) {
  if (h.n != target.n()) throw DimensionError("hypothesis and target differ in n");
  try {
    return h.to_mp() == dt_to_mp(target);
  } catch (const CapacityError&) {
    // Too many names for the exact expansion: compare on random points.
    Rng rng(0x7e57);
    for (int k = 0; k < 100000; ++k) {
      Assignment x = Assignment::random(h.n, rng);
      if (h.eval(x) != target.eval(x)) return false;
    }
    return true;
  }
}

Algo parse_algo(const std::string& name) {
  if (name == "det") return Algo::Det;
  if (name == "rand") return Algo::Rand;
  if (name == "km") return Algo::Km;
  throw ParameterError("unknown algorithm '" + name + "' (det|rand|km)");
}

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::Det: return "det";
    case Algo::Rand: return "rand";
    case Algo::Km: return "km";
  }
  return "?";
}

}  // namespace dtl
