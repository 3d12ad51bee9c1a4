#pragma once

#include <compare>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dtlearn/core.hpp"
#include "dtlearn/designs.hpp"

namespace dtl {

// Product of distinct variables; empty is the constant 1.
struct Monomial {
  std::vector<int> vars;  // strictly increasing, 1-based

  Monomial() = default;
  explicit Monomial(std::vector<int> v);

  int size() const { return static_cast<int>(vars.size()); }
  bool eval(const Assignment& a) const;
  std::string to_string() const;

  bool operator==(const Monomial&) const = default;
  // Smaller monomials first, then lexicographic.
  std::strong_ordering operator<=>(const Monomial& o) const;
};

// Multilinear polynomial over GF(2) in canonical (set) form.
class MultivariatePoly {
 public:
  MultivariatePoly() = default;
  explicit MultivariatePoly(int N) : N_(N) {}
  MultivariatePoly(int N, std::set<Monomial> monomials);

  int N() const { return N_; }
  const std::set<Monomial>& monomials() const { return m_; }
  std::size_t size() const { return m_.size(); }
  bool is_zero() const { return m_.empty(); }
  int degree() const;
  // Sorted union of the monomials' variables.
  std::vector<int> support() const;

  // Adds M (so an existing copy cancels).
  void toggle(const Monomial& M);
  bool contains(const Monomial& M) const { return m_.count(M) > 0; }

  bool operator==(const MultivariatePoly&) const = default;

 private:
  int N_ = 0;
  std::set<Monomial> m_;
};

bool eval_mp(const MultivariatePoly& p, const Assignment& a);
MultivariatePoly add_mp(const MultivariatePoly& p, const MultivariatePoly& q);
MultivariatePoly dt_to_mp(const DecisionTree& tree);

// s draws of a monomial with size uniform in [0, d]; repeats cancel, so the
// result has at most s monomials.
MultivariatePoly random_mp(int N, int d, std::size_t s, Rng& rng);

// Renames local variable k to names[k-1] over an ambient N.
MultivariatePoly rename_mp(const MultivariatePoly& p, const std::vector<int>& names,
                           int N);

// One monomial per line as "x3 x7"; the constant monomial is "1"; the zero
// polynomial is the empty text.
void write_mp(std::ostream& out, const MultivariatePoly& p);
MultivariatePoly read_mp(std::istream& in, int N);

// True iff g(c*z) = 0 for every z in Z. Stops at the first nonzero value.
bool zero_test(Oracle& g, const BinaryDesign& Z, const Assignment& c);
bool zero_test(Oracle& g, const BinaryDesign& Z);

// Scatters a into the one-positions of b.
Assignment delta_embed(const Assignment& a, const Assignment& b);

struct LearnMonomialStats {
  int iterations = 0;
  uint64_t zero_tests = 0;
  // (wt(b), wt(a delta b)) at each shrink.
  std::vector<std::pair<int, int>> shrinks;
};

// Iteration cap on the shrink loop: ceil(2d ln N) + 1.
int learn_monomial_iteration_bound(int N, int d);

// A monomial of f, or nullopt when f is identically zero. Z must be the
// zero-test set for (N, d).
std::optional<Monomial> learn_monomial(Oracle& f, int N, int d,
                                       const BinaryDesign& Z,
                                       LearnMonomialStats* stats = nullptr);

struct LearnMpStats {
  std::vector<LearnMonomialStats> rounds;
  uint64_t zero_tests = 0;
  std::size_t zero_test_size = 0;
};

MultivariatePoly learn_mp(Oracle& f, int N, int d, std::size_t s,
                          LearnMpStats* stats = nullptr);

}  // namespace dtl
