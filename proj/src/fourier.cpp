#include "dtlearn/fourier.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <tuple>

namespace dtl {

namespace {

using i128 = __int128;

constexpr int64_t kMax = INT64_MAX;

Dyadic from_wide(i128 num, int log_den) {
  while (log_den > 0 && num != 0 && (num & 1) == 0) {
    num >>= 1;
    --log_den;
  }
  if (num > kMax || num < -kMax) throw CapacityError("dyadic numerator overflow");
  return Dyadic(static_cast<int64_t>(num), log_den);
}

i128 shifted(int64_t num, int by) {
  if (by > 62) throw CapacityError("dyadic denominator gap too large");
  i128 v = static_cast<i128>(num) << by;
  return v;
}

// Ones at coordinates 1..r of an n-bit vector.
Assignment prefix_mask(int r, int n) {
  Assignment m(n);
  for (int i = 1; i <= r; ++i) m.set(i, true);
  return m;
}

// alpha (r bits) widened to n bits with zeros after it.
Assignment pad(const Assignment& alpha, int n) {
  Assignment p(n);
  for (int k = 0; k < alpha.num_words(); ++k) p.word_ref(k) = alpha.word(k);
  return p;
}

Assignment extend(const Assignment& alpha, bool bit) {
  Assignment e(alpha.size() + 1);
  for (int k = 0; k < alpha.num_words(); ++k) e.word_ref(k) = alpha.word(k);
  if (bit) e.set(alpha.size() + 1, true);
  return e;
}

Assignment concat(const Assignment& y, const Assignment& x) {
  Assignment p = pad(y, y.size() + x.size());
  for (int i : x.ones()) p.set(y.size() + i, true);
  return p;
}

void check_design(const BinaryDesign& s, int need, const char* which) {
  if (s.n == 0) return;
  if (!s.bias || s.bias->max_weight < need) {
    throw ContractError(std::string(which) + " lacks a bias certificate of weight " +
                        std::to_string(need));
  }
}

// A design over zero coordinates may be given without its single empty row.
const BinaryDesign& nonempty(const BinaryDesign& s) {
  static const BinaryDesign point = full_cube(0);
  return s.n == 0 && s.rows.empty() ? point : s;
}

// +1 / -1 truth table of g = 1 - 2f; index bit 0 is coordinate 1.
std::vector<int8_t> sign_table(Oracle& f, int n) {
  std::vector<int8_t> t(std::size_t{1} << n);
  for (uint64_t k = 0; k < t.size(); ++k) {
    t[k] = f.ask(Assignment::from_word(n, k)) ? -1 : 1;
  }
  return t;
}

Dyadic exact_f_alpha(const std::vector<int8_t>& g, int n, const Assignment& alpha) {
  const int r = alpha.size();
  const uint64_t a = alpha.low_word();
  i128 total = 0;
  for (uint64_t x = 0; x < (uint64_t{1} << (n - r)); ++x) {
    int64_t s = 0;
    for (uint64_t y = 0; y < (uint64_t{1} << r); ++y) {
      int v = g[y | (x << r)];
      s += (std::popcount(a & y) & 1) ? -v : v;
    }
    total += static_cast<i128>(s) * s;
  }
  return from_wide(total, n + r);
}

Dyadic exact_coefficient(const std::vector<int8_t>& g, int n, const Assignment& alpha) {
  const uint64_t a = alpha.low_word();
  int64_t s = 0;
  for (uint64_t x = 0; x < g.size(); ++x) s += (std::popcount(a & x) & 1) ? -g[x] : g[x];
  return Dyadic(s, n);
}

Dyadic clamp_unit(const Dyadic& v) {
  if (v < Dyadic(0)) return Dyadic(0);
  if (v > Dyadic(1)) return Dyadic(1);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

Dyadic::Dyadic(int64_t num, int log_den) : num_(num), log_den_(log_den) {
  if (log_den < 0) throw ParameterError("dyadic log denominator must be >= 0");
  normalize();
}

void Dyadic::normalize() {
  if (num_ == 0) {
    log_den_ = 0;
    return;
  }
  int tz = std::min(std::countr_zero(static_cast<uint64_t>(num_)), log_den_);
  num_ >>= tz;
  log_den_ -= tz;
}

double Dyadic::to_double() const { return std::ldexp(static_cast<double>(num_), -log_den_); }

std::string Dyadic::to_string() const {
  if (log_den_ == 0) return std::to_string(num_);
  return std::to_string(num_) + "/2^" + std::to_string(log_den_);
}

std::ostream& operator<<(std::ostream& out, const Dyadic& v) {
  return out << v.to_string();
}

int64_t Dyadic::scaled(int log_den) const {
  if (log_den < log_den_) throw ParameterError("value is not on the requested grid");
  i128 v = shifted(num_, log_den - log_den_);
  if (v > kMax || v < -kMax) throw CapacityError("dyadic numerator overflow");
  return static_cast<int64_t>(v);
}

Dyadic Dyadic::operator+(const Dyadic& o) const {
  const int L = std::max(log_den_, o.log_den_);
  return from_wide(shifted(num_, L - log_den_) + shifted(o.num_, L - o.log_den_), L);
}

Dyadic Dyadic::operator-(const Dyadic& o) const { return *this + (-o); }

Dyadic Dyadic::operator*(const Dyadic& o) const {
  return from_wide(static_cast<i128>(num_) * o.num_, log_den_ + o.log_den_);
}

std::strong_ordering Dyadic::operator<=>(const Dyadic& o) const {
  const int L = std::max(log_den_, o.log_den_);
  i128 a = shifted(num_, L - log_den_);
  i128 b = shifted(o.num_, L - o.log_den_);
  return a < b ? std::strong_ordering::less
               : (a > b ? std::strong_ordering::greater : std::strong_ordering::equal);
}

void SparseDFT::add(const Assignment& a, const Dyadic& v) {
  if (v.is_zero()) return;
  auto [it, fresh] = coeffs.try_emplace(a, v);
  if (fresh) return;
  it->second += v;
  if (it->second.is_zero()) coeffs.erase(it);
}

Dyadic SparseDFT::at(const Assignment& a) const {
  auto it = coeffs.find(a);
  return it == coeffs.end() ? Dyadic(0) : it->second;
}

Dyadic SparseDFT::l1() const {
  Dyadic s;
  for (const auto& [a, c] : coeffs) s += c.abs();
  return s;
}

Dyadic SparseDFT::sum_squares() const {
  Dyadic s;
  for (const auto& [a, c] : coeffs) s += c * c;
  return s;
}

int parity(const Assignment& a, const Assignment& x) {
  if (a.size() != x.size()) throw DimensionError("parity dimension mismatch");
  uint64_t acc = 0;
  for (int k = 0; k < a.num_words(); ++k) acc ^= a.word(k) & x.word(k);
  return std::popcount(acc) & 1;
}

// ---------------------------------------------------------------------------

namespace {

// c * (1 -+ chi_i) / 2 applied to every entry.
std::map<Assignment, Dyadic> times_literal(const std::map<Assignment, Dyadic>& m,
                                           int i, bool positive) {
  const Dyadic half(1, 1);
  SparseDFT out;
  for (const auto& [a, c] : m) {
    Dyadic h = c * half;
    out.add(a, h);
    Assignment b = a;
    b.flip(i);
    out.add(b, positive ? -h : h);
  }
  return std::move(out.coeffs);
}

void expand_paths(const DecisionTree& t, int idx, const std::map<Assignment, Dyadic>& acc,
                  SparseDFT& out) {
  const auto& nd = t.node(idx);
  if (nd.var == 0) {
    const bool neg = nd.lo != 0;
    for (const auto& [a, c] : acc) out.add(a, neg ? -c : c);
    return;
  }
  expand_paths(t, nd.hi, times_literal(acc, nd.var, true), out);
  expand_paths(t, nd.lo, times_literal(acc, nd.var, false), out);
}

}  // namespace

SparseDFT term_dft(int n, const std::vector<std::pair<int, bool>>& literals) {
  std::map<Assignment, Dyadic> m{{Assignment(n), Dyadic(1)}};
  for (auto [i, pos] : literals) {
    if (i < 1 || i > n) throw IndexError("literal variable out of range");
    m = times_literal(m, i, pos);
  }
  SparseDFT out;
  out.n = n;
  out.d = static_cast<int>(literals.size());
  out.coeffs = std::move(m);
  return out;
}

SparseDFT dt_to_dft(const DecisionTree& tree) {
  SparseDFT out;
  out.n = tree.n();
  out.d = tree.depth();
  expand_paths(tree, tree.root(), {{Assignment(tree.n()), Dyadic(1)}}, out);
  return out;
}

Dyadic eval_dft(const SparseDFT& dft, const Assignment& x) {
  if (x.size() != dft.n) throw DimensionError("eval_dft dimension mismatch");
  Dyadic s;
  for (const auto& [a, c] : dft.coeffs) s += parity(a, x) ? -c : c;
  return s;
}

bool eval_dft_bool(const SparseDFT& dft, const Assignment& x) {
  return eval_dft(dft, x) < Dyadic(0);
}

Dyadic f_alpha_exact(const SparseDFT& dft, const Assignment& alpha) {
  const int r = alpha.size();
  if (r > dft.n) throw DimensionError("prefix longer than n");
  const Assignment mask = prefix_mask(r, dft.n);
  const Assignment p = pad(alpha, dft.n);
  Dyadic s;
  for (const auto& [a, c] : dft.coeffs) {
    if ((a & mask) == p) s += c * c;
  }
  return s;
}

uint64_t chernoff_samples(double lambda, double delta) {
  if (!(lambda > 0) || !(delta > 0) || !(delta < 1)) {
    throw ParameterError("chernoff_samples needs lambda > 0 and 0 < delta < 1");
  }
  const double m = std::ceil(2.0 / (lambda * lambda) * std::log(2.0 / delta));
  if (!(m < 0x1p62)) throw CapacityError("sample count overflows");
  return static_cast<uint64_t>(m);
}

Dyadic round_to_grid(int64_t num, int64_t den, int log_den, uint64_t* ties) {
  if (den <= 0) throw ParameterError("round_to_grid needs den > 0");
  i128 N = shifted(num, log_den);
  i128 q = N / den;
  i128 rem = N - q * den;
  if (rem < 0) {
    rem += den;
    --q;
  }
  if (2 * rem > den) {
    ++q;
  } else if (2 * rem == den && ties) {
    ++*ties;
  }
  return from_wide(q, log_den);
}

Dyadic round_to_grid(double v, int log_den, uint64_t* ties) {
  const double x = std::ldexp(v, log_den);
  double fl = std::floor(x);
  const double frac = x - fl;
  if (frac > 0.5) {
    fl += 1;
  } else if (frac == 0.5 && ties) {
    ++*ties;
  }
  if (!(std::fabs(fl) < 0x1p62)) throw CapacityError("rounded value overflows");
  return Dyadic(static_cast<int64_t>(fl), log_den);
}

std::vector<Dyadic> f_alpha_sampled_level(Oracle& f, const std::vector<Assignment>& alphas,
                                          int n, int d, double delta, Rng& rng,
                                          EstimatorStats* stats) {
  if (f.arity() != n) throw DimensionError("estimator arity != n");
  if (alphas.empty()) return {};
  const int r = alphas.front().size();
  if (r > n) throw DimensionError("prefix longer than n");
  for (const auto& a : alphas) {
    if (a.size() != r) throw DimensionError("prefixes of one level differ in length");
  }
  const uint64_t m = chernoff_samples(std::ldexp(1.0, -(2 * d + 1)), delta);
  const Assignment mask = prefix_mask(r, n);
  std::vector<Assignment> pads;
  pads.reserve(alphas.size());
  for (const auto& a : alphas) pads.push_back(pad(a, n));
  std::vector<int64_t> sums(alphas.size(), 0);

  for (uint64_t s = 0; s < m; ++s) {
    // yx and zx share the suffix x; chi_a(y)chi_a(z) = chi_a(y + z).
    Assignment p1 = Assignment::random(n, rng);
    Assignment z = Assignment::random(n, rng);
    Assignment p2 = (p1 & ~mask) | (z & mask);
    const int prod = f.ask(p1) == f.ask(p2) ? 1 : -1;
    const Assignment diff = p1 ^ p2;
    for (std::size_t k = 0; k < pads.size(); ++k) {
      sums[k] += parity(pads[k], diff) ? -prod : prod;
    }
  }
  EstimatorStats local;
  EstimatorStats& st = stats ? *stats : local;
  st.calls += alphas.size();
  st.samples += m;
  st.queries += 2 * m;
  std::vector<Dyadic> out;
  out.reserve(alphas.size());
  for (int64_t s : sums) {
    out.push_back(clamp_unit(round_to_grid(s, static_cast<int64_t>(m), 2 * d, &st.anomalies)));
  }
  return out;
}

Dyadic f_alpha_sampled(Oracle& f, const Assignment& alpha, int n, int d, double delta,
                       Rng& rng, EstimatorStats* stats) {
  return f_alpha_sampled_level(f, {alpha}, n, d, delta, rng, stats).front();
}

double f_alpha_deterministic(Oracle& f, const Assignment& alpha, int n, int d,
                             const BinaryDesign& s1, const BinaryDesign& s2,
                             EstimatorStats* stats) {
  if (f.arity() != n) throw DimensionError("estimator arity != n");
  const int r = alpha.size();
  if (s1.n != r || s2.n != n - r) throw DimensionError("design lengths must be r and n - r");
  check_design(s1, std::min(r, alpha.weight() + d), "S1");
  check_design(s2, std::min(n - r, 2 * d), "S2");
  const BinaryDesign& S1 = nonempty(s1);
  const BinaryDesign& S2 = nonempty(s2);
  const auto& rows1 = S1.rows;
  const auto& rows2 = S2.rows;
  const i128 W1 = S1.total_weight(), W2 = S2.total_weight();

  long double total = 0;
  for (std::size_t k2 = 0; k2 < rows2.size(); ++k2) {
    i128 inner = 0;
    for (std::size_t k1 = 0; k1 < rows1.size(); ++k1) {
      const Assignment& y = rows1[k1];
      const int g = f.ask(concat(y, rows2[k2])) ? -1 : 1;
      const int chi = parity(alpha, y) ? -1 : 1;
      inner += static_cast<i128>(S1.weight(k1)) * g * chi;
    }
    const long double h = static_cast<long double>(inner) / static_cast<long double>(W1);
    total += static_cast<long double>(S2.weight(k2)) * h * h;
  }
  if (stats) {
    ++stats->calls;
    stats->samples += rows1.size() * rows2.size();
    stats->queries += rows1.size() * rows2.size();
  }
  return static_cast<double>(total / static_cast<long double>(W2));
}

double f_alpha_error_bound(double l1, double lambda1, double lambda2) {
  return 2 * l1 * lambda1 + l1 * l1 * lambda2;
}

BinaryDesign full_cube(int k) {
  if (k > 24) throw CapacityError("full cube above 2^24 rows");
  BinaryDesign s;
  s.n = k;
  for (uint64_t w = 0; w < (uint64_t{1} << k); ++w) s.rows.push_back(Assignment::from_word(k, w));
  s.bias = BiasCertificate{0.0, k};
  return s;
}

BinaryDesign small_bias_design(int k, int max_weight, double lambda) {
  if (k == 0 || max_weight >= k) return full_cube(k);
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, BinaryDesign> memo;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(k, max_weight, lambda);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  GeneratorMatrix M = kwise_matrix(k, max_weight);
  BinaryDesign s = compose_biased(M, biased_set(M.m, lambda));
  memo.emplace(key, s);
  return s;
}

// ---------------------------------------------------------------------------

KmEstimator parse_km_estimator(const std::string& name) {
  if (name == "exact") return KmEstimator::Exact;
  if (name == "sampled") return KmEstimator::Sampled;
  if (name == "det") return KmEstimator::Deterministic;
  throw ParameterError("unknown estimator '" + name + "' (exact|sampled|det)");
}

SparseDFT km_learn(Oracle& f, int n, int d, const KmOptions& opts, KmStats* stats) {
  if (f.arity() != n) throw DimensionError("km_learn arity != n");
  if (d < 0) throw ParameterError("km_learn needs d >= 0");
  if (opts.estimator == KmEstimator::Exact && n > 20) {
    throw ParameterError("exact estimator enumerates the cube; needs n <= 20");
  }
  if (opts.estimator == KmEstimator::Deterministic && (d > 1 || n > 8)) {
    throw ParameterError("deterministic estimator is limited to d <= 1, n <= 8");
  }
  KmStats local;
  KmStats& st = stats ? *stats : local;
  const uint64_t cap = uint64_t{1} << (2 * d);
  const double delta_call = opts.delta / static_cast<double>((2 * n + 1) * cap);
  auto lam = [](double v, int e) { return v > 0 ? v : std::ldexp(1.0, -e); };
  const double l1 = lam(opts.lambda1, 3 * d + 4);
  const double l2 = lam(opts.lambda2, 4 * d + 3);
  const double l3 = lam(opts.lambda3, 2 * d + 2);
  Rng rng(opts.seed);

  std::vector<int8_t> table;
  if (opts.estimator == KmEstimator::Exact) {
    table = sign_table(f, n);
    st.est.queries += table.size();
  }

  std::vector<Assignment> T{Assignment(0)};
  st.level_sizes.assign(1, 1);
  st.levels.clear();
  if (opts.keep_levels) st.levels.push_back({0, {{Assignment(0), Dyadic(1)}}});
  for (int r = 0; r < n; ++r) {
    std::vector<Assignment> cand;
    cand.reserve(2 * T.size());
    for (const auto& a : T) {
      cand.push_back(extend(a, false));
      cand.push_back(extend(a, true));
    }
    std::vector<Dyadic> F;
    switch (opts.estimator) {
      case KmEstimator::Exact:
        for (const auto& a : cand) F.push_back(exact_f_alpha(table, n, a));
        st.est.calls += cand.size();
        break;
      case KmEstimator::Sampled:
        F = f_alpha_sampled_level(f, cand, n, d, delta_call, rng, &st.est);
        break;
      case KmEstimator::Deterministic: {
        // Extensions may have weight d + 1, so S1 covers tests up to 2d + 1.
        const int k1 = r + 1, k2 = n - r - 1;
        BinaryDesign s1 = small_bias_design(k1, std::min(k1, 2 * d + 1), l1);
        BinaryDesign s2 = small_bias_design(k2, std::min(k2, 2 * d), l2);
        for (const auto& a : cand) {
          double v = f_alpha_deterministic(f, a, n, d, s1, s2, &st.est);
          F.push_back(clamp_unit(round_to_grid(v, 2 * d, &st.est.anomalies)));
        }
        break;
      }
    }
    std::vector<Assignment> next;
    PrefixSet level{r + 1, {}};
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (F[k].is_zero()) continue;
      if (opts.keep_levels) level.alphas.emplace(cand[k], F[k]);
      next.push_back(std::move(cand[k]));
    }
    if (opts.keep_levels) st.levels.push_back(std::move(level));
    if (next.size() > cap) {
      throw InvariantError("prefix level " + std::to_string(r + 1) + " holds " +
                           std::to_string(next.size()) + " > 4^d strings");
    }
    T = std::move(next);
    st.level_sizes.push_back(T.size());
  }

  SparseDFT out;
  out.n = n;
  out.d = d;
  if (T.empty()) return out;
  switch (opts.estimator) {
    case KmEstimator::Exact:
      for (const auto& a : T) out.add(a, exact_coefficient(table, n, a));
      break;
    case KmEstimator::Sampled: {
      const uint64_t m = chernoff_samples(std::ldexp(1.0, -(d + 1)), delta_call);
      std::vector<int64_t> sums(T.size(), 0);
      for (uint64_t s = 0; s < m; ++s) {
        Assignment x = Assignment::random(n, rng);
        const int g = f.ask(x) ? -1 : 1;
        for (std::size_t k = 0; k < T.size(); ++k) sums[k] += parity(T[k], x) ? -g : g;
      }
      st.est.calls += T.size();
      st.est.samples += m;
      st.est.queries += m;
      for (std::size_t k = 0; k < T.size(); ++k) {
        out.add(T[k], round_to_grid(sums[k], static_cast<int64_t>(m), d, &st.est.anomalies));
      }
      break;
    }
    case KmEstimator::Deterministic: {
      BinaryDesign s = small_bias_design(n, std::min(n, 2 * d), l3);
      const i128 W = s.total_weight();
      std::vector<i128> sums(T.size(), 0);
      for (std::size_t j = 0; j < s.size(); ++j) {
        const int g = f.ask(s.rows[j]) ? -1 : 1;
        for (std::size_t k = 0; k < T.size(); ++k) {
          sums[k] += static_cast<i128>(s.weight(j)) * (parity(T[k], s.rows[j]) ? -g : g);
        }
      }
      st.est.calls += T.size();
      st.est.samples += s.size();
      st.est.queries += s.size();
      for (std::size_t k = 0; k < T.size(); ++k) {
        const double v = static_cast<double>(sums[k]) / static_cast<double>(W);
        out.add(T[k], round_to_grid(v, d, &st.est.anomalies));
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RelevantSet find_witnesses(const SparseDFT& dft) {
  const int n = dft.n;
  Assignment support(n);
  for (const auto& [a, c] : dft.coeffs) support |= a;
  RelevantSet R;
  for (int i : support.ones()) {
    // g(x|x_i<-1) - g(x|x_i<-0) = sum over a with a_i = 1 of -2 c_a chi_{a-i}.
    SparseDFT G;
    for (const auto& [a, c] : dft.coeffs) {
      if (!a.get(i)) continue;
      Assignment k = a;
      k.flip(i);
      G.add(k, c * Dyadic(-2));
    }
    Assignment x(n);
    Assignment rest(n);
    for (const auto& [a, c] : G.coeffs) rest |= a;
    for (int j : rest.ones()) {
      SparseDFT G0, G1;
      for (const auto& [a, c] : G.coeffs) {
        if (a.get(j)) {
          Assignment k = a;
          k.flip(j);
          G0.add(k, c);
          G1.add(k, -c);
        } else {
          G0.add(a, c);
          G1.add(a, c);
        }
      }
      if (!G0.coeffs.empty()) {
        G = std::move(G0);
      } else {
        G = std::move(G1);
        x.set(j, true);
      }
    }
    if (G.coeffs.empty()) throw InvariantError("witness search lost the difference");
    Assignment a = x, b = x;
    a.set(i, true);
    b.set(i, false);
    R.add(i, std::move(a), std::move(b));
  }
  return R;
}

void write_dft(std::ostream& out, const SparseDFT& dft) {
  for (const auto& [a, c] : dft.coeffs) {
    out << a.to_string() << ' ' << c.num() << ' ' << c.log_den() << '\n';
  }
}

SparseDFT read_dft(std::istream& in, int n, int d) {
  SparseDFT out;
  out.n = n;
  out.d = d;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string bits;
    int64_t num = 0;
    int ld = -1;
    std::string extra;
    if (!(ls >> bits >> num >> ld) || (ls >> extra) || ld < 0 ||
        static_cast<int>(bits.size()) != n ||
        bits.find_first_not_of("01") != std::string::npos) {
      throw FormatError("bad DFT line " + std::to_string(lineno) + ": " + line);
    }
    out.add(Assignment::from_string(bits), Dyadic(num, ld));
  }
  return out;
}

}  // namespace dtl
