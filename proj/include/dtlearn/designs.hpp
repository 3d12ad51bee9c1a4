#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dtlearn/core.hpp"

namespace dtl {

inline constexpr uint64_t kDesignSeed = 0x5eed'd351'9a11'0001ULL;

// Bias guarantee attached to a design: every nonzero linear test of weight
// at most max_weight has bias at most lambda (max_weight >= n means all).
struct BiasCertificate {
  double lambda = 1.0;
  int max_weight = 0;
};

// Binary design. Rows are distinct; when `weights` is non-empty, row k stands
// for weights[k] copies, so means over the design are weighted.
struct BinaryDesign {
  int n = 0;
  std::vector<Assignment> rows;
  std::vector<uint64_t> weights;
  std::optional<BiasCertificate> bias;

  std::size_t size() const { return rows.size(); }
  uint64_t weight(std::size_t k) const {
    return weights.empty() ? 1 : weights[k];
  }
  uint64_t total_weight() const;
};

struct TernaryDesign {
  int n = 0;
  std::vector<TernaryPattern> rows;
  std::size_t size() const { return rows.size(); }
};

struct HashFamily {
  int n = 0;
  int q = 0;
  std::vector<std::vector<int>> funcs;  // funcs[h][i-1] in [1, q]
  std::size_t size() const { return funcs.size(); }
};

// m x n matrix over GF(2); every `strength` columns are independent.
struct GeneratorMatrix {
  int m = 0;
  int n = 0;
  int strength = 0;
  std::vector<Assignment> rows;  // m rows of length n

  // xM for x in {0,1}^m.
  Assignment times(const Assignment& x) const;
  Assignment column(int i) const;
};

GeneratorMatrix kwise_matrix(int n, int d);
// Distinct points of {xM}; exactly d-wise independent.
BinaryDesign kwise_space(int n, int d, int max_log_size = 24);

// Powering construction over GF(2^k): rows indexed by (alpha, beta), bit i is
// <alpha^(i-1), beta>. Rows are returned distinct with multiplicities.
BinaryDesign biased_set(int m, double lambda, uint64_t max_size = 1ULL << 26);
// {xM : x in S-hat}, duplicates folded into weights.
BinaryDesign compose_biased(const GeneratorMatrix& M, const BinaryDesign& s_hat);

enum class UniversalBackend { Auto, Kwise, Greedy };
BinaryDesign universal_set(int t, int d,
                           UniversalBackend backend = UniversalBackend::Auto,
                           uint64_t seed = kDesignSeed);
// Whether the greedy backend fits its coverage-table budget.
bool greedy_universal_feasible(int t, int d);

HashFamily perfect_hash_family(int n, int q, int d, Rng& rng,
                               uint64_t verify_budget = 1ULL << 27);

enum class UdsBackend { Auto, Composed, Random };

struct UdsOptions {
  UdsBackend backend = UdsBackend::Auto;
  uint64_t seed = kDesignSeed;
  // Composed designs above this many rows are not built.
  std::size_t max_rows = std::size_t{1} << 21;
  // Random backend: union-bound failure probability <= 2^-failure_log2.
  double failure_log2 = 40.0;
};

struct UdsInfo {
  UdsBackend backend = UdsBackend::Composed;
  int q = 0;
  std::size_t u_size = 0;
  std::size_t w_size = 0;
  std::size_t h_size = 0;
  double failure_bound = 0.0;  // 0 for constructions correct by proof
};

TernaryDesign universal_disjoint_set(int n, int d, const UdsOptions& opts = {},
                                     UdsInfo* info = nullptr);
// Memoized default-option design, shared across learner runs.
std::shared_ptr<const TernaryDesign> shared_universal_disjoint_set(
    int n, int d, UdsInfo* info = nullptr);

BinaryDesign sparse_all_one_set(int n, int d);
BinaryDesign zero_test_set(int N, int d, uint64_t max_size = 1ULL << 22);

struct DesignReport {
  bool pass = true;
  uint64_t checked = 0;
  std::vector<int> tuple;  // first violated coordinate tuple (1-based)
  std::vector<int> xi;     // pattern on the tuple
  int j = 0;               // free position within the tuple (UDS only)
  double measured = 0.0;   // max bias, or max weight for sparse all-one sets
  std::string detail;
};

DesignReport verify_uds(const TernaryDesign& s, int d,
                        uint64_t budget = 1ULL << 34);
DesignReport verify_universal(const BinaryDesign& u, int d,
                              uint64_t budget = 1ULL << 34);
DesignReport verify_kwise(const BinaryDesign& s, int d,
                          uint64_t budget = 1ULL << 34);
DesignReport verify_saos(const BinaryDesign& s, int d);
DesignReport verify_zero_test(const BinaryDesign& z, int d);
DesignReport verify_phf(const HashFamily& h, int d,
                        uint64_t budget = 1ULL << 34);
DesignReport verify_bias(const BinaryDesign& s, int max_weight, double lambda,
                         uint64_t budget = 1ULL << 34);
double max_bias(const BinaryDesign& s, int max_weight);

enum class DesignKind { Uds, Saos, ZeroTest, Phf, Universal, Kwise, Biased };
DesignKind parse_design_kind(const std::string& name);
std::string design_kind_name(DesignKind k);

using AnyDesign = std::variant<BinaryDesign, TernaryDesign, HashFamily>;

struct VerifyParams {
  int d = 1;
  double lambda = 1.0;
  uint64_t budget = 1ULL << 34;
};
DesignReport verify_design(const AnyDesign& design, DesignKind kind,
                           const VerifyParams& params);
std::string report_to_text(const DesignReport& r, DesignKind kind);

// Row-per-line text: 0/1/z symbols; weighted rows carry " xW".
void write_design(std::ostream& out, const AnyDesign& design);

uint64_t binomial(int n, int k);
// Calls fn(indices) for every k-subset of [n] in lexicographic order; stops
// early when fn returns false. Indices are 1-based.
template <typename Fn>
bool for_each_subset(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return true;
  std::vector<int> idx(k);
  for (int t = 0; t < k; ++t) idx[t] = t + 1;
  while (true) {
    if (!fn(static_cast<const std::vector<int>&>(idx))) return false;
    int t = k - 1;
    while (t >= 0 && idx[t] == n - k + t + 1) --t;
    if (t < 0) return true;
    ++idx[t];
    for (int u = t + 1; u < k; ++u) idx[u] = idx[u - 1] + 1;
  }
}

}  // namespace dtl
