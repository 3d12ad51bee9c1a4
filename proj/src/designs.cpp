#include "dtlearn/designs.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#if defined(__BMI2__)
#include <immintrin.h>
#endif

#include "dtlearn/gf2m.hpp"

namespace dtl {

uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<uint64_t>::max()) {
      return std::numeric_limits<uint64_t>::max();
    }
  }
  return static_cast<uint64_t>(r);
}

uint64_t BinaryDesign::total_weight() const {
  if (weights.empty()) return rows.size();
  uint64_t t = 0;
  for (uint64_t w : weights) t += w;
  return t;
}

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t saturating_mul(uint64_t a, uint64_t b) {
  if (a != 0 && b > std::numeric_limits<uint64_t>::max() / a) {
    return std::numeric_limits<uint64_t>::max();
  }
  return a * b;
}

inline uint64_t extract_bits(uint64_t word, uint64_t mask) {
#if defined(__BMI2__)
  return _pext_u64(word, mask);
#else
  uint64_t out = 0;
  for (int j = 0; mask; ++j, mask &= mask - 1) {
    if (word & mask & (~mask + 1)) out |= uint64_t{1} << j;
  }
  return out;
#endif
}

// Distinct rows with multiplicities, in Assignment order.
BinaryDesign fold(int n, absl::flat_hash_map<Assignment, uint64_t>& hist) {
  BinaryDesign out;
  out.n = n;
  std::vector<std::pair<Assignment, uint64_t>> items(hist.begin(), hist.end());
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [row, w] : items) {
    out.rows.push_back(row);
    out.weights.push_back(w);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Assignment GeneratorMatrix::times(const Assignment& x) const {
  if (x.size() != m) throw DimensionError("xM needs |x| = m");
  Assignment out(n);
  for (int r = 1; r <= m; ++r) {
    if (x.get(r)) out ^= rows[r - 1];
  }
  return out;
}

Assignment GeneratorMatrix::column(int i) const {
  Assignment c(m);
  for (int r = 1; r <= m; ++r) {
    if (rows[r - 1].get(i)) c.set(r, true);
  }
  return c;
}

GeneratorMatrix kwise_matrix(int n, int d) {
  if (n < 1) throw ParameterError("kwise_matrix needs n >= 1");
  if (d < 1 || d > n) throw ParameterError("kwise_matrix needs 1 <= d <= n");
  int w = ceil_log2(static_cast<uint64_t>(n));
  int s = d / 2;  // ceil((d-1)/2)
  GeneratorMatrix M;
  M.n = n;
  M.m = w * s + 1;
  M.strength = d;
  M.rows.assign(M.m, Assignment(n));
  M.rows[0] = Assignment(n, true);
  if (s == 0) return M;
  GF2m field(w);
  for (int i = 1; i <= n; ++i) {
    uint64_t alpha = static_cast<uint64_t>(i - 1);
    for (int j = 0; j < s; ++j) {
      uint64_t v = field.pow(alpha, 2 * j + 1);
      for (int t = 0; t < w; ++t) {
        if ((v >> t) & 1) M.rows[1 + j * w + t].set(i, true);
      }
    }
  }
  return M;
}

BinaryDesign kwise_space(int n, int d, int max_log_size) {
  GeneratorMatrix M = kwise_matrix(n, d);
  // Row-space basis by elimination on the lowest set coordinate.
  std::vector<Assignment> basis;
  for (Assignment r : M.rows) {
    for (const Assignment& b : basis) {
      int lead = b.ones().front();
      if (r.get(lead)) r ^= b;
    }
    if (!r.any()) continue;
    int lead = r.ones().front();
    for (Assignment& b : basis) {
      if (b.get(lead)) b ^= r;
    }
    basis.push_back(r);
  }
  int rank = static_cast<int>(basis.size());
  if (rank > max_log_size) {
    throw CapacityError("kwise space of 2^" + std::to_string(rank) +
                        " points exceeds limit");
  }
  BinaryDesign out;
  out.n = n;
  out.rows.reserve(std::size_t{1} << rank);
  Assignment cur(n);
  out.rows.push_back(cur);
  for (uint64_t g = 1; g < (uint64_t{1} << rank); ++g) {
    cur ^= basis[std::countr_zero(g)];
    out.rows.push_back(cur);
  }
  std::sort(out.rows.begin(), out.rows.end());
  out.bias = BiasCertificate{0.0, d};
  return out;
}

BinaryDesign biased_set(int m, double lambda, uint64_t max_size) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ParameterError("biased_set needs 0 < lambda < 1");
  }
  if (m < 1 || m > 64) throw ParameterError("biased_set needs 1 <= m <= 64");
  int k = 1;
  while (static_cast<double>(m - 1) > lambda * std::ldexp(1.0, k)) {
    ++k;
    if (k > 31) throw CapacityError("biased_set field too large");
  }
  uint64_t pairs = uint64_t{1} << (2 * k);
  if (pairs > max_size) {
    throw CapacityError("biased_set needs " + std::to_string(pairs) +
                        " samples, over the limit");
  }
  GF2m field(k);
  uint64_t q = field.order();
  std::vector<uint64_t> hist_dense;
  absl::flat_hash_map<uint64_t, uint64_t> hist_sparse;
  bool dense = m <= 22;
  if (dense) hist_dense.assign(std::size_t{1} << m, 0);
  auto bump = [&](uint64_t row) {
    if (dense) {
      ++hist_dense[row];
    } else {
      ++hist_sparse[row];
    }
  };
  std::vector<uint64_t> cols(k);
  for (uint64_t alpha = 0; alpha < q; ++alpha) {
    std::fill(cols.begin(), cols.end(), 0);
    uint64_t p = 1;
    for (int i = 0; i < m; ++i) {
      for (int t = 0; t < k; ++t) {
        if ((p >> t) & 1) cols[t] |= uint64_t{1} << i;
      }
      p = field.mul(p, alpha);
    }
    // Walk beta in Gray-code order so each step is one column xor.
    uint64_t row = 0;
    bump(row);
    for (uint64_t g = 1; g < q; ++g) {
      row ^= cols[std::countr_zero(g)];
      bump(row);
    }
  }
  absl::flat_hash_map<Assignment, uint64_t> hist;
  if (dense) {
    for (uint64_t r = 0; r < hist_dense.size(); ++r) {
      if (hist_dense[r]) hist.emplace(Assignment::from_word(m, r), hist_dense[r]);
    }
  } else {
    for (auto [r, c] : hist_sparse) hist.emplace(Assignment::from_word(m, r), c);
  }
  BinaryDesign out = fold(m, hist);
  out.bias = BiasCertificate{static_cast<double>(m - 1) / std::ldexp(1.0, k), m};
  return out;
}

BinaryDesign compose_biased(const GeneratorMatrix& M,
                            const BinaryDesign& s_hat) {
  if (s_hat.n != M.m) throw DimensionError("compose_biased needs rows of length m");
  absl::flat_hash_map<Assignment, uint64_t> hist;
  for (std::size_t k = 0; k < s_hat.size(); ++k) {
    hist[M.times(s_hat.rows[k])] += s_hat.weight(k);
  }
  BinaryDesign out = fold(M.n, hist);
  if (s_hat.bias && s_hat.bias->max_weight >= s_hat.n) {
    out.bias = BiasCertificate{s_hat.bias->lambda, M.strength};
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr uint64_t kGreedyBudget = uint64_t{1} << 27;

BinaryDesign greedy_universal(int t, int k, uint64_t seed) {
  const uint64_t C = binomial(t, k);
  const uint64_t P = uint64_t{1} << k;
  std::vector<uint64_t> masks;
  masks.reserve(C);
  for_each_subset(t, k, [&](const std::vector<int>& idx) {
    uint64_t mk = 0;
    for (int i : idx) mk |= uint64_t{1} << (i - 1);
    masks.push_back(mk);
    return true;
  });
  std::vector<uint64_t> covered((C * P + 63) / 64, 0);
  auto is_covered = [&](uint64_t c) { return (covered[c >> 6] >> (c & 63)) & 1; };
  uint64_t uncovered = C * P;
  uint64_t cursor = 0;
  const uint64_t tmask = t == 64 ? ~uint64_t{0} : (uint64_t{1} << t) - 1;
  Rng rng(seed ^ mix64((static_cast<uint64_t>(t) << 32) | static_cast<unsigned>(k)));
  const int candidates =
      static_cast<int>(std::clamp<uint64_t>((uint64_t{1} << 22) / C, 1, 8));

  BinaryDesign out;
  out.n = t;
  while (uncovered > 0) {
    while (is_covered(cursor)) ++cursor;
    const uint64_t s = cursor / P;
    const uint64_t pat = cursor % P;
    uint64_t forced = 0;
    {
      uint64_t mk = masks[s];
      for (uint64_t j = 0; mk; ++j, mk &= mk - 1) {
        if ((pat >> j) & 1) forced |= mk & (~mk + 1);
      }
    }
    uint64_t best_row = 0;
    uint64_t best_gain = 0;
    for (int c = 0; c < candidates; ++c) {
      uint64_t row = ((rng() & tmask) & ~masks[s]) | forced;
      uint64_t gain = 0;
      for (uint64_t u = 0; u < C; ++u) {
        gain += !is_covered(u * P + extract_bits(row, masks[u]));
      }
      if (gain > best_gain) {
        best_gain = gain;
        best_row = row;
      }
    }
    for (uint64_t u = 0; u < C; ++u) {
      uint64_t c = u * P + extract_bits(best_row, masks[u]);
      covered[c >> 6] |= uint64_t{1} << (c & 63);
    }
    uncovered -= best_gain;
    out.rows.push_back(Assignment::from_word(t, best_row));
  }
  std::sort(out.rows.begin(), out.rows.end());
  return out;
}

}  // namespace

bool greedy_universal_feasible(int t, int d) {
  if (t > 64 || d < 1 || d > t) return false;
  return saturating_mul(binomial(t, d), uint64_t{1} << std::min(d, 62)) <=
         kGreedyBudget;
}

BinaryDesign universal_set(int t, int d, UniversalBackend backend,
                           uint64_t seed) {
  if (d < 1 || d > t) throw ParameterError("universal_set needs 1 <= d <= t");
  if (backend == UniversalBackend::Auto) {
    backend = greedy_universal_feasible(t, d) ? UniversalBackend::Greedy
                                              : UniversalBackend::Kwise;
  }
  if (backend == UniversalBackend::Greedy) {
    if (!greedy_universal_feasible(t, d)) {
      throw CapacityError("greedy universal set exceeds its coverage budget");
    }
    return greedy_universal(t, d, seed);
  }
  BinaryDesign u = kwise_space(t, d);
  u.bias.reset();
  return u;
}

// ---------------------------------------------------------------------------

namespace {

bool injective_on(const std::vector<int>& h, const int* idx, int d) {
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      if (h[idx[a] - 1] == h[idx[b] - 1]) return false;
    }
  }
  return true;
}

}  // namespace

HashFamily perfect_hash_family(int n, int q, int d, Rng& rng,
                               uint64_t verify_budget) {
  if (d < 1 || d > n) throw ParameterError("perfect_hash_family needs 1 <= d <= n");
  if (q < d) throw ParameterError("perfect_hash_family needs q >= d");
  HashFamily H{n, q, {}};
  std::vector<int> base(n);
  if (n <= q || d == 1) {
    for (int i = 1; i <= n; ++i) base[i - 1] = (i - 1) % q + 1;
    H.funcs.push_back(base);
    return H;
  }
  if (q <= 2 * d * d) throw ParameterError("perfect_hash_family needs q > 2d^2");
  uint64_t C = binomial(n, d);
  if (saturating_mul(C, static_cast<uint64_t>(d)) > verify_budget) {
    throw CapacityError("perfect hash verification exceeds budget");
  }
  std::vector<int> pending;
  pending.reserve(C * d);
  for_each_subset(n, d, [&](const std::vector<int>& idx) {
    pending.insert(pending.end(), idx.begin(), idx.end());
    return true;
  });
  std::uniform_int_distribution<int> pick(1, q);
  constexpr int kMaxMaps = 100000;
  while (!pending.empty()) {
    if (static_cast<int>(H.funcs.size()) >= kMaxMaps) {
      throw CapacityError("perfect hash family did not converge");
    }
    std::vector<int> h(n);
    for (auto& v : h) v = pick(rng);
    std::size_t keep = 0;
    for (std::size_t off = 0; off < pending.size(); off += d) {
      if (!injective_on(h, &pending[off], d)) {
        std::copy_n(&pending[off], d, &pending[keep]);
        keep += d;
      }
    }
    if (keep == pending.size()) continue;  // splits nothing new
    pending.resize(keep);
    H.funcs.push_back(std::move(h));
  }
  return H;
}

// ---------------------------------------------------------------------------

namespace {

int uds_q(int d) {
  int q = 1;
  while (q <= 4 * d * d) q <<= 1;
  return q;
}

TernaryDesign build_composed(int n, int d, const UdsOptions& opts,
                             UdsInfo* info) {
  const int q_spec = uds_q(d);
  const int q = n <= q_spec ? n : q_spec;
  const int k = d - 1;  // the free coordinate needs no pattern from U

  if (k > 0 && !greedy_universal_feasible(q, k)) {
    int w = ceil_log2(static_cast<uint64_t>(q));
    int m = w * (k / 2) + 1;
    if (m > 24 || saturating_mul(uint64_t{1} << m, static_cast<uint64_t>(q)) >
                      opts.max_rows) {
      throw CapacityError("composed universal disjoint set too large");
    }
  }
  BinaryDesign U;
  if (k == 0) {
    U.n = q;
    U.rows.push_back(Assignment(q));
  } else {
    U = universal_set(q, k, UniversalBackend::Auto, opts.seed);
  }
  HashFamily H;
  if (n <= q) {
    H.n = n;
    H.q = q;
    std::vector<int> id(n);
    for (int i = 1; i <= n; ++i) id[i - 1] = i;
    H.funcs.push_back(id);
  } else {
    Rng rng(opts.seed ^ mix64((static_cast<uint64_t>(n) << 32) |
                              static_cast<unsigned>(d)));
    H = perfect_hash_family(n, q, d, rng, uint64_t{1} << 24);
  }
  const std::size_t w_size = U.size() * static_cast<std::size_t>(q);
  if (saturating_mul(w_size, H.size()) > opts.max_rows) {
    throw CapacityError("composed universal disjoint set too large");
  }
  std::vector<TernaryPattern> W;
  W.reserve(w_size);
  for (const Assignment& u : U.rows) {
    for (int p = 1; p <= q; ++p) {
      Assignment free(q);
      free.set(p, true);
      W.emplace_back(u, free);
    }
  }
  TernaryDesign S;
  S.n = n;
  S.rows.reserve(W.size() * H.size());
  for (const auto& h : H.funcs) {
    for (const TernaryPattern& w : W) {
      TernaryPattern row(n);
      for (int i = 1; i <= n; ++i) row.set(i, w.at(h[i - 1]));
      S.rows.push_back(std::move(row));
    }
  }
  if (info) {
    *info = UdsInfo{UdsBackend::Composed, q, U.size(), W.size(), H.size(), 0.0};
  }
  return S;
}

TernaryDesign build_random(int n, int d, const UdsOptions& opts,
                           UdsInfo* info) {
  const double p = 1.0 / d;
  const double log_constraints = std::log(static_cast<double>(binomial(n, d))) +
                                 d * std::log(2.0) + std::log(static_cast<double>(d));
  const double pi = p * std::pow(1.0 - p, d - 1) / std::ldexp(1.0, d - 1);
  const double target = log_constraints + opts.failure_log2 * std::log(2.0);
  const auto rows = static_cast<std::size_t>(std::ceil(target / pi));
  Rng rng(opts.seed ^ mix64((static_cast<uint64_t>(n) << 33) ^
                            (static_cast<uint64_t>(d) << 7) ^ 0x7a));
  const uint64_t z_cut =
      static_cast<uint64_t>(std::ldexp(p, 32));  // P(z) on a 32-bit draw
  TernaryDesign S;
  S.n = n;
  S.rows.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    Assignment ones(n);
    Assignment free(n);
    for (int i = 1; i <= n; ++i) {
      uint64_t x = rng();
      if ((x & 0xffffffffULL) < z_cut) {
        free.set(i, true);
      } else if ((x >> 32) & 1) {
        ones.set(i, true);
      }
    }
    S.rows.emplace_back(std::move(ones), std::move(free));
  }
  if (info) {
    double bound = std::exp(log_constraints - pi * static_cast<double>(rows));
    *info = UdsInfo{UdsBackend::Random, 0, 0, 0, 0, bound};
  }
  return S;
}

}  // namespace

TernaryDesign universal_disjoint_set(int n, int d, const UdsOptions& opts,
                                     UdsInfo* info) {
  if (d < 1 || d > n) {
    throw ParameterError("universal_disjoint_set needs 1 <= d <= n");
  }
  switch (opts.backend) {
    case UdsBackend::Composed:
      return build_composed(n, d, opts, info);
    case UdsBackend::Random:
      return build_random(n, d, opts, info);
    case UdsBackend::Auto:
      break;
  }
  try {
    return build_composed(n, d, opts, info);
  } catch (const CapacityError&) {
    return build_random(n, d, opts, info);
  }
}

std::shared_ptr<const TernaryDesign> shared_universal_disjoint_set(
    int n, int d, UdsInfo* info) {
  using Entry = std::pair<std::shared_ptr<const TernaryDesign>, UdsInfo>;
  static std::map<std::pair<int, int>, Entry> memo;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = memo.find({n, d});
  if (it == memo.end()) {
    UdsInfo built;
    auto s = std::make_shared<const TernaryDesign>(
        universal_disjoint_set(n, d, UdsOptions{}, &built));
    it = memo.emplace(std::make_pair(n, d), Entry{s, built}).first;
  }
  if (info) *info = it->second.second;
  return it->second.first;
}

// ---------------------------------------------------------------------------

BinaryDesign sparse_all_one_set(int n, int d) {
  if (d < 0 || n < 0) throw ParameterError("sparse_all_one_set needs n, d >= 0");
  BinaryDesign D;
  D.n = n;
  if (d == 0) {
    D.rows.push_back(Assignment(n));
    return D;
  }
  if (n <= d) throw ParameterError("sparse_all_one_set needs n >= d+1");
  for (int j = 0; j <= d; ++j) {
    Assignment row(n, true);
    for (int i = 1; i <= n; ++i) {
      if ((i - 1) % (d + 1) == j) row.set(i, false);
    }
    D.rows.push_back(std::move(row));
  }
  return D;
}

BinaryDesign zero_test_set(int N, int d, uint64_t max_size) {
  if (d < 0 || d > N) throw ParameterError("zero_test_set needs 0 <= d <= N");
  uint64_t total = 0;
  for (int k = 0; k <= d; ++k) total += binomial(N, k);
  if (total > max_size) {
    throw CapacityError("zero test set of " + std::to_string(total) +
                        " points exceeds limit");
  }
  BinaryDesign Z;
  Z.n = N;
  Z.rows.reserve(total);
  for (int k = 0; k <= d; ++k) {
    for_each_subset(N, k, [&](const std::vector<int>& idx) {
      Assignment z(N);
      for (int i : idx) z.set(i, true);
      Z.rows.push_back(std::move(z));
      return true;
    });
  }
  return Z;
}

// ---------------------------------------------------------------------------

namespace {

void check_budget(uint64_t cost, uint64_t budget, const char* what) {
  if (cost > budget) {
    throw CapacityError(std::string(what) + " verification exceeds budget");
  }
}

std::vector<int> pattern_bits(uint64_t pat, int d) {
  std::vector<int> xi(d);
  for (int k = 0; k < d; ++k) xi[k] = (pat >> k) & 1;
  return xi;
}

// Smallest T with |T| <= budget meeting every set in `sets`, if any.
bool find_hitting_set(const std::vector<Assignment>& sets,
                      std::vector<char>& hit, int budget,
                      std::vector<int>& chosen) {
  std::vector<int> open;
  for (std::size_t r = 0; r < sets.size(); ++r) {
    if (!hit[r]) open.push_back(static_cast<int>(r));
  }
  if (open.empty()) return true;
  if (budget == 0) return false;
  // Disjoint open sets each need their own element.
  int packing = 0;
  Assignment used(sets[0].size());
  for (int r : open) {
    if (!(sets[r] & used).any()) {
      ++packing;
      used |= sets[r];
    }
  }
  if (packing > budget) return false;
  int pick = *std::min_element(open.begin(), open.end(), [&](int a, int b) {
    return sets[a].weight() < sets[b].weight();
  });
  for (int e : sets[pick].ones()) {
    std::vector<char> next = hit;
    for (std::size_t r = 0; r < sets.size(); ++r) {
      if (sets[r].get(e)) next[r] = 1;
    }
    chosen.push_back(e);
    if (find_hitting_set(sets, next, budget - 1, chosen)) return true;
    chosen.pop_back();
  }
  return false;
}

struct BiasArgmax {
  double bias = 0.0;
  Assignment alpha;
};

BiasArgmax bias_scan(const BinaryDesign& s, int max_weight, uint64_t budget) {
  const int n = s.n;
  const double total = static_cast<double>(s.total_weight());
  BiasArgmax best;
  best.alpha = Assignment(n);
  if (n <= 20) {
    std::vector<int64_t> f(std::size_t{1} << n, 0);
    for (std::size_t k = 0; k < s.size(); ++k) {
      f[s.rows[k].low_word()] += static_cast<int64_t>(s.weight(k));
    }
    for (std::size_t h = 1; h < f.size(); h <<= 1) {
      for (std::size_t i = 0; i < f.size(); i += 2 * h) {
        for (std::size_t j = i; j < i + h; ++j) {
          int64_t a = f[j];
          int64_t b = f[j + h];
          f[j] = a + b;
          f[j + h] = a - b;
        }
      }
    }
    for (std::size_t a = 1; a < f.size(); ++a) {
      if (std::popcount(a) > max_weight) continue;
      double b = std::abs(static_cast<double>(f[a])) / total;
      if (b > best.bias) {
        best.bias = b;
        best.alpha = Assignment::from_word(n, a);
      }
    }
    return best;
  }
  uint64_t tests = 0;
  for (int k = 1; k <= std::min(max_weight, n); ++k) tests += binomial(n, k);
  check_budget(saturating_mul(tests, s.size()), budget, "bias");
  for (int k = 1; k <= std::min(max_weight, n); ++k) {
    for_each_subset(n, k, [&](const std::vector<int>& idx) {
      Assignment alpha(n);
      for (int i : idx) alpha.set(i, true);
      int64_t acc = 0;
      for (std::size_t r = 0; r < s.size(); ++r) {
        int par = (s.rows[r] & alpha).weight() & 1;
        acc += par ? -static_cast<int64_t>(s.weight(r))
                   : static_cast<int64_t>(s.weight(r));
      }
      double b = std::abs(static_cast<double>(acc)) / total;
      if (b > best.bias) {
        best.bias = b;
        best.alpha = alpha;
      }
      return true;
    });
  }
  return best;
}

}  // namespace

DesignReport verify_uds(const TernaryDesign& s, int d, uint64_t budget) {
  const int n = s.n;
  if (d < 1 || d > n) throw ParameterError("verify_uds needs 1 <= d <= n");
  check_budget(saturating_mul(binomial(n, d), s.size() * d), budget, "uds");
  DesignReport rep;
  const uint64_t half = uint64_t{1} << (d - 1);
  std::vector<char> seen(d * half);
  for_each_subset(n, d, [&](const std::vector<int>& T) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const TernaryPattern& row : s.rows) {
      int j = -1;
      int frees = 0;
      for (int k = 0; k < d; ++k) {
        if (row.free().get(T[k])) {
          ++frees;
          j = k;
        }
      }
      if (frees != 1) continue;
      uint64_t pat = 0;
      int bit = 0;
      for (int k = 0; k < d; ++k) {
        if (k == j) continue;
        if (row.ones().get(T[k])) pat |= uint64_t{1} << bit;
        ++bit;
      }
      seen[j * half + pat] = 1;
    }
    rep.checked += d * (uint64_t{1} << d);
    for (int j = 0; j < d; ++j) {
      for (uint64_t pat = 0; pat < half; ++pat) {
        if (seen[j * half + pat]) continue;
        rep.pass = false;
        rep.tuple = T;
        rep.j = j + 1;
        rep.xi.assign(d, 0);
        int bit = 0;
        for (int k = 0; k < d; ++k) {
          if (k == j) continue;
          rep.xi[k] = (pat >> bit) & 1;
          ++bit;
        }
        return false;
      }
    }
    return true;
  });
  rep.detail = rep.pass ? "all constraints met" : "uncovered constraint";
  return rep;
}

DesignReport verify_universal(const BinaryDesign& u, int d, uint64_t budget) {
  const int n = u.n;
  if (d < 1 || d > n) throw ParameterError("verify_universal needs 1 <= d <= n");
  check_budget(saturating_mul(binomial(n, d), u.size() * d), budget, "universal");
  DesignReport rep;
  std::vector<char> seen(std::size_t{1} << d);
  for_each_subset(n, d, [&](const std::vector<int>& T) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const Assignment& row : u.rows) {
      uint64_t pat = 0;
      for (int k = 0; k < d; ++k) pat |= uint64_t{row.get(T[k])} << k;
      seen[pat] = 1;
    }
    rep.checked += seen.size();
    for (uint64_t pat = 0; pat < seen.size(); ++pat) {
      if (!seen[pat]) {
        rep.pass = false;
        rep.tuple = T;
        rep.xi = pattern_bits(pat, d);
        return false;
      }
    }
    return true;
  });
  rep.detail = rep.pass ? "every pattern realized" : "missing pattern";
  return rep;
}

DesignReport verify_kwise(const BinaryDesign& s, int d, uint64_t budget) {
  const int n = s.n;
  if (d < 1 || d > n) throw ParameterError("verify_kwise needs 1 <= d <= n");
  check_budget(saturating_mul(binomial(n, d), s.size() * d), budget, "kwise");
  DesignReport rep;
  const uint64_t total = s.total_weight();
  std::vector<uint64_t> count(std::size_t{1} << d);
  for_each_subset(n, d, [&](const std::vector<int>& T) {
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t r = 0; r < s.size(); ++r) {
      uint64_t pat = 0;
      for (int k = 0; k < d; ++k) pat |= uint64_t{s.rows[r].get(T[k])} << k;
      count[pat] += s.weight(r);
    }
    rep.checked += count.size();
    for (uint64_t pat = 0; pat < count.size(); ++pat) {
      if (count[pat] * count.size() != total) {
        rep.pass = false;
        rep.tuple = T;
        rep.xi = pattern_bits(pat, d);
        rep.measured = static_cast<double>(count[pat]) / static_cast<double>(total);
        return false;
      }
    }
    return true;
  });
  rep.detail = rep.pass ? "exact pattern counts " + std::to_string(total >> d)
                        : "unequal pattern count";
  return rep;
}

DesignReport verify_saos(const BinaryDesign& s, int d) {
  const int n = s.n;
  DesignReport rep;
  std::ostringstream det;
  int max_wt = 0;
  for (const Assignment& r : s.rows) max_wt = std::max(max_wt, r.weight());
  rep.measured = max_wt;
  if (d == 0) {
    rep.pass = s.size() == 1 && !s.rows[0].any();
    rep.detail = rep.pass ? "d=0: single zero row" : "d=0 expects {0^n}";
    return rep;
  }
  bool size_ok = s.size() == static_cast<std::size_t>(d + 1);
  const double limit = n * (1.0 - 1.0 / (2.0 * d));
  bool weight_ok = max_wt <= limit + 1e-9;
  std::vector<Assignment> zeros;
  for (const Assignment& r : s.rows) zeros.push_back(~r);
  std::vector<char> hit(zeros.size(), 0);
  std::vector<int> chosen;
  bool cover_ok = true;
  if (!zeros.empty() && n >= d && find_hitting_set(zeros, hit, d, chosen)) {
    cover_ok = false;
    // Pad to a full d-subset; extra coordinates cannot help coverage.
    std::vector<char> in(n + 1, 0);
    for (int i : chosen) in[i] = 1;
    for (int i = 1; i <= n && static_cast<int>(chosen.size()) < d; ++i) {
      if (!in[i]) chosen.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());
    rep.tuple = chosen;
    rep.xi.assign(d, 1);
  }
  rep.checked = binomial(n, d);
  rep.pass = size_ok && weight_ok && cover_ok;
  det << "size " << s.size() << (size_ok ? " ok" : " FAIL") << "; max weight "
      << max_wt << " vs " << limit << (weight_ok ? " ok" : " FAIL")
      << "; coverage" << (cover_ok ? " ok" : " FAIL");
  rep.detail = det.str();
  return rep;
}

DesignReport verify_zero_test(const BinaryDesign& z, int d) {
  const int N = z.n;
  if (d < 0 || d > N) throw ParameterError("verify_zero_test needs 0 <= d <= N");
  absl::flat_hash_set<Assignment> have(z.rows.begin(), z.rows.end());
  DesignReport rep;
  for (int k = 0; k <= d && rep.pass; ++k) {
    for_each_subset(N, k, [&](const std::vector<int>& idx) {
      Assignment ind(N);
      for (int i : idx) ind.set(i, true);
      ++rep.checked;
      if (!have.contains(ind)) {
        rep.pass = false;
        rep.tuple = idx;
        return false;
      }
      return true;
    });
  }
  rep.detail = rep.pass ? "every indicator of size <= d present"
                        : "missing subset indicator";
  return rep;
}

DesignReport verify_phf(const HashFamily& h, int d, uint64_t budget) {
  if (d < 1 || d > h.n) throw ParameterError("verify_phf needs 1 <= d <= n");
  check_budget(saturating_mul(binomial(h.n, d), h.size() * d * d), budget, "phf");
  DesignReport rep;
  for_each_subset(h.n, d, [&](const std::vector<int>& T) {
    ++rep.checked;
    for (const auto& f : h.funcs) {
      if (injective_on(f, T.data(), d)) return true;
    }
    rep.pass = false;
    rep.tuple = T;
    return false;
  });
  rep.detail = rep.pass ? "every subset split" : "subset not split";
  return rep;
}

double max_bias(const BinaryDesign& s, int max_weight) {
  return bias_scan(s, max_weight, std::numeric_limits<uint64_t>::max()).bias;
}

DesignReport verify_bias(const BinaryDesign& s, int max_weight, double lambda,
                         uint64_t budget) {
  BiasArgmax b = bias_scan(s, max_weight, budget);
  DesignReport rep;
  rep.measured = b.bias;
  rep.pass = b.bias <= lambda + 1e-12;
  if (!rep.pass) rep.tuple = b.alpha.ones();
  std::ostringstream det;
  det << "max bias " << b.bias << " over tests of weight <= " << max_weight
      << " (bound " << lambda << ")";
  rep.detail = det.str();
  return rep;
}

// ---------------------------------------------------------------------------

DesignKind parse_design_kind(const std::string& name) {
  static const std::map<std::string, DesignKind> kinds{
      {"uds", DesignKind::Uds},         {"saos", DesignKind::Saos},
      {"zerotest", DesignKind::ZeroTest}, {"phf", DesignKind::Phf},
      {"universal", DesignKind::Universal}, {"kwise", DesignKind::Kwise},
      {"biased", DesignKind::Biased}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ValidationError("unknown design kind " + name);
  return it->second;
}

std::string design_kind_name(DesignKind k) {
  switch (k) {
    case DesignKind::Uds: return "uds";
    case DesignKind::Saos: return "saos";
    case DesignKind::ZeroTest: return "zerotest";
    case DesignKind::Phf: return "phf";
    case DesignKind::Universal: return "universal";
    case DesignKind::Kwise: return "kwise";
    case DesignKind::Biased: return "biased";
  }
  return "?";
}

DesignReport verify_design(const AnyDesign& design, DesignKind kind,
                           const VerifyParams& params) {
  auto binary = [&]() -> const BinaryDesign& {
    if (!std::holds_alternative<BinaryDesign>(design)) {
      throw ValidationError(design_kind_name(kind) + " expects a binary design");
    }
    return std::get<BinaryDesign>(design);
  };
  switch (kind) {
    case DesignKind::Uds:
      if (!std::holds_alternative<TernaryDesign>(design)) {
        throw ValidationError("uds expects a ternary design");
      }
      return verify_uds(std::get<TernaryDesign>(design), params.d, params.budget);
    case DesignKind::Phf:
      if (!std::holds_alternative<HashFamily>(design)) {
        throw ValidationError("phf expects a hash family");
      }
      return verify_phf(std::get<HashFamily>(design), params.d, params.budget);
    case DesignKind::Saos:
      return verify_saos(binary(), params.d);
    case DesignKind::ZeroTest:
      return verify_zero_test(binary(), params.d);
    case DesignKind::Universal:
      return verify_universal(binary(), params.d, params.budget);
    case DesignKind::Kwise:
      return verify_kwise(binary(), params.d, params.budget);
    case DesignKind::Biased:
      return verify_bias(binary(), params.d, params.lambda, params.budget);
  }
  throw ValidationError("unknown design kind");
}

std::string report_to_text(const DesignReport& r, DesignKind kind) {
  std::ostringstream out;
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k) s += ',';
      s += std::to_string(v[k]);
    }
    return s;
  };
  out << "kind: " << design_kind_name(kind) << '\n'
      << "pass: " << (r.pass ? "true" : "false") << '\n'
      << "checked: " << r.checked << '\n';
  if (r.pass) {
    out << "violation: none\n";
  } else {
    out << "violation: tuple=" << join(r.tuple);
    if (!r.xi.empty()) out << " xi=" << join(r.xi);
    if (r.j) out << " j=" << r.j;
    out << '\n';
  }
  out << "measured: " << r.measured << '\n' << "detail: " << r.detail << '\n';
  return out.str();
}

void write_design(std::ostream& out, const AnyDesign& design) {
  if (const auto* b = std::get_if<BinaryDesign>(&design)) {
    for (std::size_t k = 0; k < b->size(); ++k) {
      out << b->rows[k].to_string();
      if (!b->weights.empty()) out << " x" << b->weights[k];
      out << '\n';
    }
  } else if (const auto* t = std::get_if<TernaryDesign>(&design)) {
    for (const auto& row : t->rows) out << row.to_string() << '\n';
  } else {
    const auto& h = std::get<HashFamily>(design);
    for (const auto& f : h.funcs) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) out << ' ';
        out << f[i];
      }
      out << '\n';
    }
  }
}

}  // namespace dtl
