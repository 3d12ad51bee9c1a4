#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dtlearn/core.hpp"
#include "dtlearn/designs.hpp"
#include "dtlearn/relevance.hpp"

namespace dtl {

// Exact value num / 2^log_den, kept normalized (num odd or log_den == 0).
// Arithmetic that would overflow 64 bits throws CapacityError.
class Dyadic {
 public:
  Dyadic() = default;
  Dyadic(int64_t num, int log_den = 0);

  int64_t num() const { return num_; }
  int log_den() const { return log_den_; }
  bool is_zero() const { return num_ == 0; }
  double to_double() const;
  std::string to_string() const;
  // Numerator over the fixed denominator 2^log_den; throws if not on that grid.
  int64_t scaled(int log_den) const;

  Dyadic operator+(const Dyadic& o) const;
  Dyadic operator-(const Dyadic& o) const;
  Dyadic operator-() const { return Dyadic(-num_, log_den_); }
  Dyadic operator*(const Dyadic& o) const;
  Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
  Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }
  Dyadic abs() const { return Dyadic(num_ < 0 ? -num_ : num_, log_den_); }

  bool operator==(const Dyadic& o) const = default;
  std::strong_ordering operator<=>(const Dyadic& o) const;

 private:
  void normalize();
  int64_t num_ = 0;
  int log_den_ = 0;
};

std::ostream& operator<<(std::ostream& out, const Dyadic& v);

// Fourier expansion of g = 1 - 2f over characters chi_a(x) = (-1)^{<a,x>}.
// Zero coefficients are never stored.
struct SparseDFT {
  int n = 0;
  int d = 0;
  std::map<Assignment, Dyadic> coeffs;

  void add(const Assignment& a, const Dyadic& v);
  Dyadic at(const Assignment& a) const;
  Dyadic l1() const;
  Dyadic sum_squares() const;
  bool operator==(const SparseDFT& o) const { return n == o.n && coeffs == o.coeffs; }
};

// Level of the prefix search: r-bit prefixes alpha with their F_alpha.
struct PrefixSet {
  int r = 0;
  std::map<Assignment, Dyadic> alphas;
};

int parity(const Assignment& a, const Assignment& x);

// Expansion of the 0/1 product of literals: x_i for positive, 1 - x_i
// otherwise. Contradictory literals give the zero map.
SparseDFT term_dft(int n, const std::vector<std::pair<int, bool>>& literals);
SparseDFT dt_to_dft(const DecisionTree& tree);

// g(x) = sum_a c_a chi_a(x).
Dyadic eval_dft(const SparseDFT& dft, const Assignment& x);
// f(x) = 1 exactly when g(x) is negative.
bool eval_dft_bool(const SparseDFT& dft, const Assignment& x);

// Prefixes bind coordinates 1..r.
Dyadic f_alpha_exact(const SparseDFT& dft, const Assignment& alpha);

uint64_t chernoff_samples(double lambda, double delta);

struct EstimatorStats {
  uint64_t calls = 0;
  uint64_t samples = 0;
  uint64_t queries = 0;
  uint64_t anomalies = 0;  // rounding ties, broken downward
};

// Mean of f(yx)f(zx)chi_a(y)chi_a(z) over chernoff_samples(2^-(2d+1), delta)
// triples, rounded to the l/4^d grid.
Dyadic f_alpha_sampled(Oracle& f, const Assignment& alpha, int n, int d,
                       double delta, Rng& rng, EstimatorStats* stats = nullptr);
// Same estimate for every prefix of one length from a single sample batch, so
// the query cost does not grow with the number of prefixes.
std::vector<Dyadic> f_alpha_sampled_level(Oracle& f,
                                          const std::vector<Assignment>& alphas,
                                          int n, int d, double delta, Rng& rng,
                                          EstimatorStats* stats = nullptr);

// E_{x in S2}[(E_{y in S1}[f(yx)chi_a(y)])^2] with weighted design means.
// S1 must certify weight min(r, wt(alpha) + d) and S2 weight min(n - r, 2d);
// a design over zero coordinates needs no certificate.
double f_alpha_deterministic(Oracle& f, const Assignment& alpha, int n, int d,
                             const BinaryDesign& s1, const BinaryDesign& s2,
                             EstimatorStats* stats = nullptr);
double f_alpha_error_bound(double l1, double lambda1, double lambda2);

// Certified design on k coordinates, lambda-biased on tests of weight at most
// max_weight: the full cube when max_weight >= k, else a composed set.
BinaryDesign small_bias_design(int k, int max_weight, double lambda);
BinaryDesign full_cube(int k);

// Nearest point of the k/2^log_den grid to num/den; ties go down and bump
// *ties when given.
Dyadic round_to_grid(int64_t num, int64_t den, int log_den,
                     uint64_t* ties = nullptr);
Dyadic round_to_grid(double v, int log_den, uint64_t* ties = nullptr);

enum class KmEstimator { Exact, Sampled, Deterministic };
KmEstimator parse_km_estimator(const std::string& name);

struct KmOptions {
  KmEstimator estimator = KmEstimator::Sampled;
  double delta = 0.05;
  uint64_t seed = 1;
  // Deterministic estimator biases; the defaults sit strictly below the
  // rounding threshold.
  double lambda1 = -1;  // 2^-(3d+4) when negative
  double lambda2 = -1;  // 2^-(4d+3) when negative
  double lambda3 = -1;  // 2^-(2d+2) when negative, final coefficients
  bool keep_levels = false;
};

struct KmStats {
  std::vector<std::size_t> level_sizes;  // |T_r| for r = 0..n
  std::vector<PrefixSet> levels;         // filled with keep_levels
  EstimatorStats est;
};

SparseDFT km_learn(Oracle& f, int n, int d, const KmOptions& opts = {},
                   KmStats* stats = nullptr);

// Relevant variables and witnesses read off the coefficient map alone.
RelevantSet find_witnesses(const SparseDFT& dft);

// "index_bits numerator log_denominator" per coefficient, index order.
void write_dft(std::ostream& out, const SparseDFT& dft);
SparseDFT read_dft(std::istream& in, int n, int d);

}  // namespace dtl
