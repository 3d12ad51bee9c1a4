#pragma once

#include <absl/container/flat_hash_map.h>
#include <absl/container/inlined_vector.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtlearn/errors.hpp"

namespace dtl {

using Rng = std::mt19937_64;

// Fixed-length bit vector. Variable x_i lives at 1-based position i; all
// accessors take 1-based indices. Bits past size() are kept zero.
class Assignment {
 public:
  using Words = absl::InlinedVector<uint64_t, 2>;

  Assignment() = default;
  explicit Assignment(int n, bool value = false);

  // "0110" with coordinate 1 first.
  static Assignment from_string(std::string_view bits);
  // Low n bits of `word`, bit 0 is coordinate 1. Requires n <= 64.
  static Assignment from_word(int n, uint64_t word);
  static Assignment random(int n, Rng& rng);

  int size() const { return n_; }
  bool get(int i) const { return (w_[(i - 1) >> 6] >> ((i - 1) & 63)) & 1U; }
  void set(int i, bool v);
  void flip(int i) { w_[(i - 1) >> 6] ^= uint64_t{1} << ((i - 1) & 63); }
  int weight() const;
  bool any() const;
  // Sorted 1-based indices of the one-coordinates.
  std::vector<int> ones() const;
  std::string to_string() const;

  // Raw word access; word k holds coordinates 64k+1 .. 64k+64.
  int num_words() const { return static_cast<int>(w_.size()); }
  uint64_t word(int k) const { return w_[k]; }
  uint64_t& word_ref(int k) { return w_[k]; }
  uint64_t low_word() const { return w_.empty() ? 0 : w_[0]; }

  Assignment operator^(const Assignment& o) const;
  Assignment operator&(const Assignment& o) const;
  Assignment operator|(const Assignment& o) const;
  Assignment operator~() const;
  Assignment& operator^=(const Assignment& o);
  Assignment& operator&=(const Assignment& o);
  Assignment& operator|=(const Assignment& o);

  bool operator==(const Assignment& o) const = default;
  // Lexicographic with coordinate 1 most significant, matching to_string().
  std::strong_ordering operator<=>(const Assignment& o) const;

  template <typename H>
  friend H AbslHashValue(H h, const Assignment& a) {
    return H::combine(std::move(h), a.n_, a.w_);
  }

 private:
  void check_same(const Assignment& o) const;
  void trim();

  int n_ = 0;
  Words w_;
};

// Coordinatewise AND.
Assignment mask_product(const Assignment& a, const Assignment& x);

enum class Symbol : uint8_t { ZERO = 0, ONE = 1, FREE = 2 };

// Element of {0,1,z}^n, stored as two masks so substitution is word-parallel.
class TernaryPattern {
 public:
  TernaryPattern() = default;
  explicit TernaryPattern(int n) : ones_(n), free_(n) {}
  TernaryPattern(Assignment ones, Assignment free);
  // "01z1" with coordinate 1 first.
  static TernaryPattern from_string(std::string_view s);

  int size() const { return ones_.size(); }
  Symbol at(int i) const;
  void set(int i, Symbol s);
  const Assignment& ones() const { return ones_; }
  const Assignment& free() const { return free_; }
  std::vector<int> free_positions() const { return free_.ones(); }
  std::string to_string() const;

  bool operator==(const TernaryPattern& o) const = default;

 private:
  Assignment ones_;  // 1 where the symbol is ONE
  Assignment free_;  // 1 where the symbol is FREE
};

// p[x] evaluated at x = a.
Assignment substitute(const TernaryPattern& p, const Assignment& a);

// Binary decision tree over n variables. Immutable; nodes are stored flat and
// addressed by index, children before parents.
class DecisionTree {
 public:
  struct Node {
    int var;  // 0 for a leaf, otherwise 1-based variable
    int lo;   // leaf value when var == 0
    int hi;
  };

  static DecisionTree leaf(int n, bool value);
  static DecisionTree internal(int var, const DecisionTree& lo,
                               const DecisionTree& hi);
  static DecisionTree literal(int n, int var, bool positive = true);

  int n() const { return n_; }
  int depth() const;
  std::size_t size() const { return nodes_.size(); }
  bool is_leaf() const { return nodes_[root_].var == 0; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }
  const Node& node(int idx) const { return nodes_[idx]; }
  // Sorted variables appearing in some internal node.
  std::vector<int> variables() const;

  bool eval(const Assignment& a) const;

  // Evaluates with x_i read through `bit(i)`; no dimension check.
  template <typename BitFn>
  bool eval_with(BitFn&& bit) const {
    int idx = root_;
    while (nodes_[idx].var != 0) {
      const Node& nd = nodes_[idx];
      idx = bit(nd.var) ? nd.hi : nd.lo;
    }
    return nodes_[idx].lo != 0;
  }

 private:
  int append(const DecisionTree& t);

  int n_ = 0;
  std::vector<Node> nodes_;
  int root_ = 0;
};

bool eval_tree(const DecisionTree& tree, const Assignment& a);

// Each node is a leaf with probability leaf_bias (forced at depth d); internal
// variables are uniform among those unused on the path; leaf values uniform.
DecisionTree random_tree(int n, int d, Rng& rng, double leaf_bias = 0.25);

// Truth table of a 2-input gate: bit (2u+v) holds g(u,v).
using Gate = uint8_t;
inline constexpr Gate kAnd = 0b1000;
inline constexpr Gate kOr = 0b1110;
inline constexpr Gate kXor = 0b0110;

// [f1,f2]_g: every leaf of f1 replaced by a relabeled copy of f2.
DecisionTree combine_trees(const DecisionTree& f1, const DecisionTree& f2,
                           Gate g);

// Tree computing f(x|_{x_i <- xi}).
DecisionTree restrict(const DecisionTree& tree, int i, bool xi);

// {"n":int,"root":node}, node = {"leaf":0|1} | {"var":i,"lo":node,"hi":node}.
std::string tree_to_json(const DecisionTree& tree, int indent = -1);
DecisionTree tree_from_json(std::string_view text);
DecisionTree load_tree(const std::string& path);
void save_tree(const DecisionTree& tree, const std::string& path);

// Total map from source variables x_1..x_n onto fresh variables y_1..y_m.
struct Projection {
  int n = 0;
  int m = 0;
  std::vector<int> map;  // map[i-1] = j means P(x_i) = y_j (1-based)

  static Projection uniform(int n, int m, Rng& rng);
  // The n-bit point (a_{P(1)}, ..., a_{P(n)}).
  Assignment apply(const Assignment& a) const;
  // Sorted X_j = P^{-1}(y_j).
  std::vector<int> preimage(int j) const;
  // Mask over y marking variables hit by P.
  Assignment image_mask() const;
  bool operator==(const Projection& o) const = default;
};

// Point-evaluable Boolean function.
class Target {
 public:
  virtual ~Target() = default;
  virtual int n() const = 0;
  virtual bool eval(const Assignment& a) const = 0;
  // f(P(y)) without materializing the n-bit point when possible.
  virtual bool eval_projected(const Projection& p, const Assignment& y) const {
    return eval(p.apply(y));
  }
};

class TreeTarget final : public Target {
 public:
  explicit TreeTarget(DecisionTree tree) : tree_(std::move(tree)) {}
  int n() const override { return tree_.n(); }
  bool eval(const Assignment& a) const override { return tree_.eval(a); }
  bool eval_projected(const Projection& p, const Assignment& y) const override;
  const DecisionTree& tree() const { return tree_; }

 private:
  DecisionTree tree_;
};

class FunctionTarget final : public Target {
 public:
  FunctionTarget(int n, std::function<bool(const Assignment&)> fn)
      : n_(n), fn_(std::move(fn)) {}
  int n() const override { return n_; }
  bool eval(const Assignment& a) const override { return fn_(a); }

 private:
  int n_;
  std::function<bool(const Assignment&)> fn_;
};

// Anything a learner can ask membership queries of.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual int arity() const = 0;
  virtual bool ask(const Assignment& a) = 0;
};

// Counting membership oracle with an unbounded answer cache. raw_count counts
// every query; dedup_count counts distinct points.
class MembershipOracle final : public Oracle {
 public:
  explicit MembershipOracle(std::shared_ptr<const Target> target);
  explicit MembershipOracle(const DecisionTree& tree);

  int arity() const override { return target_->n(); }
  bool ask(const Assignment& a) override { return query(a); }
  bool query(const Assignment& a);

  // Queries f at P(y) = (y_{P(1)}, ..., y_{P(n)}). Distinct points are keyed
  // by y restricted to the image of P, so dedup stays exact without building
  // the n-bit point. An oracle accepts queries under a single projection.
  bool query_projected(const Projection& p, const Assignment& y);

  uint64_t raw_count() const { return raw_; }
  uint64_t dedup_count() const { return dedup_; }
  const Target& target() const { return *target_; }

 private:
  void register_projection(const Projection& p);
  // The y-key of an n-bit point constant on every fiber of P, if it is one.
  bool fiber_key(const Assignment& a, Assignment& key) const;

  std::shared_ptr<const Target> target_;
  uint64_t raw_ = 0;
  uint64_t dedup_ = 0;
  absl::flat_hash_map<Assignment, bool> cache_;

  std::unique_ptr<Projection> proj_;
  const Projection* proj_ptr_ = nullptr;
  Assignment image_;
  absl::flat_hash_map<Assignment, bool> proj_cache_;
};

bool oracle_query(MembershipOracle& o, const Assignment& a);

// Oracle over m variables answering g(y) = f(P(y)) through a base oracle.
class ProjectedOracle final : public Oracle {
 public:
  ProjectedOracle(MembershipOracle& base, const Projection& p,
                  bool check_translation = false)
      : base_(base), p_(p), check_(check_translation) {}
  int arity() const override { return p_.m; }
  bool ask(const Assignment& y) override;

 private:
  MembershipOracle& base_;
  const Projection& p_;
  bool check_;
};

// Adapts a plain function; no counting.
class FunctionOracle final : public Oracle {
 public:
  FunctionOracle(int n, std::function<bool(const Assignment&)> fn)
      : n_(n), fn_(std::move(fn)) {}
  int arity() const override { return n_; }
  bool ask(const Assignment& a) override {
    ++calls_;
    return fn_(a);
  }
  uint64_t calls() const { return calls_; }

 private:
  int n_;
  std::function<bool(const Assignment&)> fn_;
  uint64_t calls_ = 0;
};

int ceil_log2(uint64_t x);

}  // namespace dtl
