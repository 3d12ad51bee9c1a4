#include "dtlearn/core.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace dtl {

namespace {

int words_for(int n) { return (n + 63) / 64; }

}  // namespace

int ceil_log2(uint64_t x) {
  if (x <= 1) return 0;
  return 64 - std::countl_zero(x - 1);
}

Assignment::Assignment(int n, bool value) : n_(n) {
  if (n < 0) throw ParameterError("assignment length must be non-negative");
  w_.assign(words_for(n), value ? ~uint64_t{0} : 0);
  trim();
}

Assignment Assignment::from_string(std::string_view bits) {
  Assignment a(static_cast<int>(bits.size()));
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k] == '1') {
      a.set(static_cast<int>(k) + 1, true);
    } else if (bits[k] != '0') {
      throw FormatError("assignment string must contain only 0/1");
    }
  }
  return a;
}

Assignment Assignment::from_word(int n, uint64_t word) {
  if (n > 64) throw DimensionError("from_word needs n <= 64");
  Assignment a(n);
  if (n > 0) a.w_[0] = word;
  a.trim();
  return a;
}

Assignment Assignment::random(int n, Rng& rng) {
  Assignment a(n);
  for (auto& w : a.w_) w = rng();
  a.trim();
  return a;
}

void Assignment::set(int i, bool v) {
  uint64_t bit = uint64_t{1} << ((i - 1) & 63);
  if (v) {
    w_[(i - 1) >> 6] |= bit;
  } else {
    w_[(i - 1) >> 6] &= ~bit;
  }
}

int Assignment::weight() const {
  int c = 0;
  for (uint64_t w : w_) c += std::popcount(w);
  return c;
}

bool Assignment::any() const {
  return std::any_of(w_.begin(), w_.end(), [](uint64_t w) { return w != 0; });
}

std::vector<int> Assignment::ones() const {
  std::vector<int> out;
  for (int k = 0; k < num_words(); ++k) {
    uint64_t w = w_[k];
    while (w) {
      out.push_back(64 * k + std::countr_zero(w) + 1);
      w &= w - 1;
    }
  }
  return out;
}

std::string Assignment::to_string() const {
  std::string s(n_, '0');
  for (int i = 1; i <= n_; ++i) {
    if (get(i)) s[i - 1] = '1';
  }
  return s;
}

void Assignment::check_same(const Assignment& o) const {
  if (n_ != o.n_) throw DimensionError("assignment length mismatch");
}

void Assignment::trim() {
  if (n_ % 64 != 0 && !w_.empty()) {
    w_.back() &= (uint64_t{1} << (n_ % 64)) - 1;
  }
}

Assignment Assignment::operator^(const Assignment& o) const {
  Assignment r = *this;
  r ^= o;
  return r;
}
Assignment Assignment::operator&(const Assignment& o) const {
  Assignment r = *this;
  r &= o;
  return r;
}
Assignment Assignment::operator|(const Assignment& o) const {
  Assignment r = *this;
  r |= o;
  return r;
}
Assignment Assignment::operator~() const {
  Assignment r = *this;
  for (auto& w : r.w_) w = ~w;
  r.trim();
  return r;
}
Assignment& Assignment::operator^=(const Assignment& o) {
  check_same(o);
  for (int k = 0; k < num_words(); ++k) w_[k] ^= o.w_[k];
  return *this;
}
Assignment& Assignment::operator&=(const Assignment& o) {
  check_same(o);
  for (int k = 0; k < num_words(); ++k) w_[k] &= o.w_[k];
  return *this;
}
Assignment& Assignment::operator|=(const Assignment& o) {
  check_same(o);
  for (int k = 0; k < num_words(); ++k) w_[k] |= o.w_[k];
  return *this;
}

std::strong_ordering Assignment::operator<=>(const Assignment& o) const {
  if (n_ != o.n_) return n_ <=> o.n_;
  for (int k = 0; k < num_words(); ++k) {
    uint64_t x = w_[k] ^ o.w_[k];
    if (x == 0) continue;
    uint64_t low = x & (~x + 1);
    // The side holding a 0 at the first differing coordinate sorts first.
    return (w_[k] & low) ? std::strong_ordering::greater
                         : std::strong_ordering::less;
  }
  return std::strong_ordering::equal;
}

Assignment mask_product(const Assignment& a, const Assignment& x) {
  return a & x;
}

TernaryPattern::TernaryPattern(Assignment ones, Assignment free)
    : ones_(std::move(ones)), free_(std::move(free)) {
  if (ones_.size() != free_.size()) {
    throw DimensionError("pattern masks differ in length");
  }
  ones_ &= ~free_;
}

TernaryPattern TernaryPattern::from_string(std::string_view s) {
  TernaryPattern p(static_cast<int>(s.size()));
  for (std::size_t k = 0; k < s.size(); ++k) {
    int i = static_cast<int>(k) + 1;
    switch (s[k]) {
      case '0': break;
      case '1': p.set(i, Symbol::ONE); break;
      case 'z': p.set(i, Symbol::FREE); break;
      default: throw FormatError("pattern string must contain only 0/1/z");
    }
  }
  return p;
}

Symbol TernaryPattern::at(int i) const {
  if (free_.get(i)) return Symbol::FREE;
  return ones_.get(i) ? Symbol::ONE : Symbol::ZERO;
}

void TernaryPattern::set(int i, Symbol s) {
  ones_.set(i, s == Symbol::ONE);
  free_.set(i, s == Symbol::FREE);
}

std::string TernaryPattern::to_string() const {
  std::string s(size(), '0');
  for (int i = 1; i <= size(); ++i) {
    Symbol c = at(i);
    if (c == Symbol::ONE) s[i - 1] = '1';
    if (c == Symbol::FREE) s[i - 1] = 'z';
  }
  return s;
}

Assignment substitute(const TernaryPattern& p, const Assignment& a) {
  if (p.size() != a.size()) throw DimensionError("pattern/assignment length");
  return p.ones() | (p.free() & a);
}

// ---------------------------------------------------------------------------

DecisionTree DecisionTree::leaf(int n, bool value) {
  if (n < 0) throw ParameterError("tree arity must be non-negative");
  DecisionTree t;
  t.n_ = n;
  t.nodes_.push_back({0, value ? 1 : 0, 0});
  t.root_ = 0;
  return t;
}

int DecisionTree::append(const DecisionTree& t) {
  int base = static_cast<int>(nodes_.size());
  for (Node nd : t.nodes_) {
    if (nd.var != 0) {
      nd.lo += base;
      nd.hi += base;
    }
    nodes_.push_back(nd);
  }
  return base + t.root_;
}

DecisionTree DecisionTree::internal(int var, const DecisionTree& lo,
                                    const DecisionTree& hi) {
  if (lo.n_ != hi.n_) throw DimensionError("subtree arity mismatch");
  if (var < 1 || var > lo.n_) throw IndexError("tree variable out of range");
  DecisionTree t;
  t.n_ = lo.n_;
  t.nodes_.reserve(lo.nodes_.size() + hi.nodes_.size() + 1);
  int l = t.append(lo);
  int h = t.append(hi);
  t.nodes_.push_back({var, l, h});
  t.root_ = static_cast<int>(t.nodes_.size()) - 1;
  return t;
}

DecisionTree DecisionTree::literal(int n, int var, bool positive) {
  return internal(var, leaf(n, !positive), leaf(n, positive));
}

int DecisionTree::depth() const {
  // Children precede parents, so one forward pass suffices.
  std::vector<int> dep(nodes_.size(), 0);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& nd = nodes_[k];
    if (nd.var != 0) dep[k] = 1 + std::max(dep[nd.lo], dep[nd.hi]);
  }
  return dep[root_];
}

std::vector<int> DecisionTree::variables() const {
  std::vector<int> vs;
  for (const Node& nd : nodes_) {
    if (nd.var != 0) vs.push_back(nd.var);
  }
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

bool DecisionTree::eval(const Assignment& a) const {
  if (a.size() != n_) throw DimensionError("assignment length != tree arity");
  return eval_with([&](int i) { return a.get(i); });
}

bool eval_tree(const DecisionTree& tree, const Assignment& a) {
  return tree.eval(a);
}

namespace {

DecisionTree grow(int n, int depth_left, std::vector<char>& used, Rng& rng,
                  double leaf_bias, int& unused) {
  std::bernoulli_distribution coin(leaf_bias);
  if (depth_left == 0 || unused == 0 || coin(rng)) {
    return DecisionTree::leaf(n, std::bernoulli_distribution(0.5)(rng));
  }
  std::uniform_int_distribution<int> pick(1, unused);
  int k = pick(rng);
  int var = 0;
  for (int i = 1; i <= n; ++i) {
    if (!used[i] && --k == 0) {
      var = i;
      break;
    }
  }
  used[var] = 1;
  --unused;
  DecisionTree lo = grow(n, depth_left - 1, used, rng, leaf_bias, unused);
  DecisionTree hi = grow(n, depth_left - 1, used, rng, leaf_bias, unused);
  used[var] = 0;
  ++unused;
  return DecisionTree::internal(var, lo, hi);
}

}  // namespace

DecisionTree random_tree(int n, int d, Rng& rng, double leaf_bias) {
  if (d < 0 || d > n) throw ParameterError("random_tree needs 0 <= d <= n");
  if (leaf_bias < 0.0 || leaf_bias > 1.0) {
    throw ParameterError("leaf_bias must lie in [0,1]");
  }
  std::vector<char> used(n + 1, 0);
  int unused = n;
  return grow(n, d, used, rng, leaf_bias, unused);
}

namespace {

DecisionTree relabel(const DecisionTree& t, int idx, Gate g, bool u) {
  const auto& nd = t.node(idx);
  if (nd.var == 0) {
    bool v = nd.lo != 0;
    return DecisionTree::leaf(t.n(), (g >> (2 * u + v)) & 1);
  }
  return DecisionTree::internal(nd.var, relabel(t, nd.lo, g, u),
                                relabel(t, nd.hi, g, u));
}

DecisionTree splice(const DecisionTree& f1, int idx, const DecisionTree& f2,
                    Gate g) {
  const auto& nd = f1.node(idx);
  if (nd.var == 0) return relabel(f2, f2.root(), g, nd.lo != 0);
  return DecisionTree::internal(nd.var, splice(f1, nd.lo, f2, g),
                                splice(f1, nd.hi, f2, g));
}

DecisionTree restrict_at(const DecisionTree& t, int idx, int i, bool xi) {
  const auto& nd = t.node(idx);
  if (nd.var == 0) return DecisionTree::leaf(t.n(), nd.lo != 0);
  if (nd.var == i) return restrict_at(t, xi ? nd.hi : nd.lo, i, xi);
  return DecisionTree::internal(nd.var, restrict_at(t, nd.lo, i, xi),
                                restrict_at(t, nd.hi, i, xi));
}

}  // namespace

DecisionTree combine_trees(const DecisionTree& f1, const DecisionTree& f2,
                           Gate g) {
  if (f1.n() != f2.n()) throw DimensionError("combine_trees arity mismatch");
  return splice(f1, f1.root(), f2, g);
}

DecisionTree restrict(const DecisionTree& tree, int i, bool xi) {
  if (i < 1 || i > tree.n()) throw IndexError("restrict index out of range");
  return restrict_at(tree, tree.root(), i, xi);
}

// ---------------------------------------------------------------------------

Projection Projection::uniform(int n, int m, Rng& rng) {
  if (m < 1) throw ParameterError("projection needs m >= 1");
  Projection p{n, m, std::vector<int>(n)};
  std::uniform_int_distribution<int> pick(1, m);
  for (auto& v : p.map) v = pick(rng);
  return p;
}

Assignment Projection::apply(const Assignment& a) const {
  if (a.size() != m) throw DimensionError("projection input length != m");
  Assignment out(n);
  for (int i = 1; i <= n; ++i) {
    if (a.get(map[i - 1])) out.set(i, true);
  }
  return out;
}

std::vector<int> Projection::preimage(int j) const {
  std::vector<int> xs;
  for (int i = 1; i <= n; ++i) {
    if (map[i - 1] == j) xs.push_back(i);
  }
  return xs;
}

Assignment Projection::image_mask() const {
  Assignment mask(m);
  for (int v : map) mask.set(v, true);
  return mask;
}

bool TreeTarget::eval_projected(const Projection& p,
                                const Assignment& y) const {
  return tree_.eval_with([&](int i) { return y.get(p.map[i - 1]); });
}

// ---------------------------------------------------------------------------

MembershipOracle::MembershipOracle(std::shared_ptr<const Target> target)
    : target_(std::move(target)) {
  if (!target_) throw ParameterError("oracle needs a target");
}

MembershipOracle::MembershipOracle(const DecisionTree& tree)
    : MembershipOracle(std::make_shared<TreeTarget>(tree)) {}

bool MembershipOracle::fiber_key(const Assignment& a, Assignment& key) const {
  key = Assignment(proj_->m);
  std::vector<signed char> seen(proj_->m + 1, -1);
  for (int i = 1; i <= proj_->n; ++i) {
    int j = proj_->map[i - 1];
    signed char v = a.get(i) ? 1 : 0;
    if (seen[j] < 0) {
      seen[j] = v;
      if (v) key.set(j, true);
    } else if (seen[j] != v) {
      return false;
    }
  }
  return true;
}

void MembershipOracle::register_projection(const Projection& p) {
  if (p.n != target_->n()) throw DimensionError("projection source != n");
  proj_ = std::make_unique<Projection>(p);
  proj_ptr_ = &p;
  image_ = p.image_mask();
  // Earlier plain queries that are fiber-constant move to the projected
  // cache so a point has one home whichever way it is asked.
  for (auto it = cache_.begin(); it != cache_.end();) {
    Assignment key;
    if (fiber_key(it->first, key)) {
      proj_cache_.emplace(std::move(key), it->second);
      cache_.erase(it++);
    } else {
      ++it;
    }
  }
}

bool MembershipOracle::query(const Assignment& a) {
  if (a.size() != target_->n()) {
    throw DimensionError("query length != oracle arity");
  }
  ++raw_;
  if (proj_) {
    Assignment key;
    if (fiber_key(a, key)) {
      auto [it, fresh] = proj_cache_.try_emplace(std::move(key), false);
      if (fresh) {
        ++dedup_;
        it->second = target_->eval(a);
      }
      return it->second;
    }
  }
  auto [it, fresh] = cache_.try_emplace(a, false);
  if (fresh) {
    ++dedup_;
    it->second = target_->eval(a);
  }
  return it->second;
}

bool MembershipOracle::query_projected(const Projection& p,
                                       const Assignment& y) {
  if (proj_ptr_ != &p) {
    if (!proj_) {
      register_projection(p);
    } else if (!(*proj_ == p)) {
      throw ContractError("oracle already bound to a different projection");
    } else {
      proj_ptr_ = &p;
    }
  }
  if (y.size() != p.m) throw DimensionError("projected query length != m");
  ++raw_;
  Assignment key = y & image_;
  auto [it, fresh] = proj_cache_.try_emplace(std::move(key), false);
  if (fresh) {
    ++dedup_;
    it->second = target_->eval_projected(p, y);
  }
  return it->second;
}

bool oracle_query(MembershipOracle& o, const Assignment& a) {
  return o.query(a);
}

bool ProjectedOracle::ask(const Assignment& y) {
  bool v = base_.query_projected(p_, y);
  if (check_ && v != base_.target().eval(p_.apply(y))) {
    throw InvariantError("projected query disagrees with translated point");
  }
  return v;
}

}  // namespace dtl
