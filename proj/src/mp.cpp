#include "dtlearn/mp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace dtl {

Monomial::Monomial(std::vector<int> v) : vars(std::move(v)) {
  std::sort(vars.begin(), vars.end());
  if (std::adjacent_find(vars.begin(), vars.end()) != vars.end()) {
    throw ParameterError("monomial variables must be distinct");
  }
  if (!vars.empty() && vars.front() < 1) {
    throw IndexError("monomial variables are 1-based");
  }
}

bool Monomial::eval(const Assignment& a) const {
  for (int i : vars) {
    if (!a.get(i)) return false;
  }
  return true;
}

std::string Monomial::to_string() const {
  if (vars.empty()) return "1";
  std::string s;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    if (k) s += ' ';
    s += 'x';
    s += std::to_string(vars[k]);
  }
  return s;
}

std::strong_ordering Monomial::operator<=>(const Monomial& o) const {
  if (vars.size() != o.vars.size()) return vars.size() <=> o.vars.size();
  return vars <=> o.vars;
}

MultivariatePoly::MultivariatePoly(int N, std::set<Monomial> monomials)
    : N_(N), m_(std::move(monomials)) {
  for (const Monomial& M : m_) {
    if (!M.vars.empty() && M.vars.back() > N_) {
      throw IndexError("monomial variable exceeds N");
    }
  }
}

int MultivariatePoly::degree() const {
  return m_.empty() ? 0 : m_.rbegin()->size();
}

std::vector<int> MultivariatePoly::support() const {
  std::vector<int> s;
  for (const Monomial& M : m_) s.insert(s.end(), M.vars.begin(), M.vars.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

void MultivariatePoly::toggle(const Monomial& M) {
  if (!M.vars.empty() && M.vars.back() > N_) {
    throw IndexError("monomial variable exceeds N");
  }
  auto [it, fresh] = m_.insert(M);
  if (!fresh) m_.erase(it);
}

bool eval_mp(const MultivariatePoly& p, const Assignment& a) {
  if (a.size() != p.N()) throw DimensionError("assignment length != N");
  bool v = false;
  for (const Monomial& M : p.monomials()) v ^= M.eval(a);
  return v;
}

MultivariatePoly add_mp(const MultivariatePoly& p, const MultivariatePoly& q) {
  if (p.N() != q.N()) throw DimensionError("add_mp needs equal N");
  MultivariatePoly r = p;
  for (const Monomial& M : q.monomials()) r.toggle(M);
  return r;
}

namespace {

std::set<Monomial> sym_diff(std::set<Monomial> a, const std::set<Monomial>& b) {
  for (const Monomial& M : b) {
    auto [it, fresh] = a.insert(M);
    if (!fresh) a.erase(it);
  }
  return a;
}

std::set<Monomial> times_var(const std::set<Monomial>& p, int i) {
  std::set<Monomial> out;
  for (const Monomial& M : p) {
    std::vector<int> v = M.vars;
    if (!std::binary_search(v.begin(), v.end(), i)) {
      v.insert(std::upper_bound(v.begin(), v.end(), i), i);
    }
    Monomial xM;
    xM.vars = std::move(v);
    // x_i^2 = x_i may merge two monomials, so fold as a sum.
    auto [it, fresh] = out.insert(std::move(xM));
    if (!fresh) out.erase(it);
  }
  return out;
}

std::set<Monomial> tree_poly(const DecisionTree& t, int idx) {
  const auto& nd = t.node(idx);
  if (nd.var == 0) {
    return nd.lo ? std::set<Monomial>{Monomial{}} : std::set<Monomial>{};
  }
  // x_i f_1 + (1 + x_i) f_0 = x_i f_1 + x_i f_0 + f_0.
  std::set<Monomial> lo = tree_poly(t, nd.lo);
  std::set<Monomial> hi = tree_poly(t, nd.hi);
  return sym_diff(times_var(sym_diff(hi, lo), nd.var), lo);
}

}  // namespace

MultivariatePoly dt_to_mp(const DecisionTree& tree) {
  return MultivariatePoly(tree.n(), tree_poly(tree, tree.root()));
}

MultivariatePoly random_mp(int N, int d, std::size_t s, Rng& rng) {
  if (d < 0 || d > N) throw ParameterError("random_mp needs 0 <= d <= N");
  MultivariatePoly p(N);
  std::vector<int> pool(N);
  for (int i = 0; i < N; ++i) pool[i] = i + 1;
  std::uniform_int_distribution<int> size(0, d);
  for (std::size_t k = 0; k < s; ++k) {
    int sz = size(rng);
    // Partial Fisher-Yates for sz distinct variables.
    for (int t = 0; t < sz; ++t) {
      std::uniform_int_distribution<int> pick(t, N - 1);
      std::swap(pool[t], pool[pick(rng)]);
    }
    p.toggle(Monomial(std::vector<int>(pool.begin(), pool.begin() + sz)));
  }
  return p;
}

MultivariatePoly rename_mp(const MultivariatePoly& p,
                           const std::vector<int>& names, int N) {
  if (static_cast<int>(names.size()) < p.N()) {
    throw DimensionError("rename_mp needs a name per local variable");
  }
  MultivariatePoly out(N);
  for (const Monomial& M : p.monomials()) {
    std::vector<int> v;
    for (int i : M.vars) v.push_back(names[i - 1]);
    out.toggle(Monomial(std::move(v)));
  }
  return out;
}

void write_mp(std::ostream& out, const MultivariatePoly& p) {
  for (const Monomial& M : p.monomials()) out << M.to_string() << '\n';
}

MultivariatePoly read_mp(std::istream& in, int N) {
  MultivariatePoly p(N);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<int> vars;
    bool constant = false;
    while (ls >> tok) {
      if (tok == "1") {
        constant = true;
      } else if (tok.size() >= 2 && tok[0] == 'x') {
        try {
          vars.push_back(std::stoi(tok.substr(1)));
        } catch (const std::exception&) {
          throw FormatError("bad monomial token " + tok);
        }
      } else {
        throw FormatError("bad monomial token " + tok);
      }
    }
    if (constant && !vars.empty()) throw FormatError("constant mixed with variables");
    p.toggle(Monomial(std::move(vars)));
  }
  return p;
}

bool zero_test(Oracle& g, const BinaryDesign& Z, const Assignment& c) {
  if (Z.n != g.arity() || c.size() != g.arity()) {
    throw DimensionError("zero test dimension mismatch");
  }
  for (const Assignment& z : Z.rows) {
    if (g.ask(c & z)) return false;
  }
  return true;
}

bool zero_test(Oracle& g, const BinaryDesign& Z) {
  return zero_test(g, Z, Assignment(g.arity(), true));
}

Assignment delta_embed(const Assignment& a, const Assignment& b) {
  if (a.size() != b.weight()) throw DimensionError("delta_embed needs |a| = wt(b)");
  Assignment out(b.size());
  int l = 1;
  for (int i : b.ones()) {
    if (a.get(l++)) out.set(i, true);
  }
  return out;
}

int learn_monomial_iteration_bound(int N, int d) {
  if (N <= 1 || d == 0) return 1;
  return static_cast<int>(std::ceil(2.0 * d * std::log(static_cast<double>(N)))) + 1;
}

std::optional<Monomial> learn_monomial(Oracle& f, int N, int d,
                                       const BinaryDesign& Z,
                                       LearnMonomialStats* stats) {
  if (f.arity() != N) throw DimensionError("learn_monomial arity != N");
  LearnMonomialStats local;
  LearnMonomialStats& st = stats ? *stats : local;
  ++st.zero_tests;
  if (zero_test(f, Z)) return std::nullopt;

  const int cap = learn_monomial_iteration_bound(N, d) + 1;
  Assignment b(N, true);
  while (true) {
    const int W = b.weight();
    if (W == 0) break;
    if (++st.iterations > cap) {
      throw InvariantError("learn_monomial exceeded its iteration bound");
    }
    BinaryDesign D = sparse_all_one_set(W, std::min(W - 1, d));
    bool shrunk = false;
    for (const Assignment& a : D.rows) {
      Assignment c = delta_embed(a, b);
      ++st.zero_tests;
      if (!zero_test(f, Z, c)) {
        st.shrinks.emplace_back(W, c.weight());
        b = std::move(c);
        shrunk = true;
        break;
      }
    }
    if (!shrunk) break;
  }
  return Monomial(b.ones());
}

namespace {

// f + P, simulated locally. Monomials are kept as masks for the
// containment test.
class SumOracle final : public Oracle {
 public:
  explicit SumOracle(Oracle& f) : f_(f) {}
  int arity() const override { return f_.arity(); }
  bool ask(const Assignment& a) override {
    bool v = f_.ask(a);
    if (a.size() <= 64) {
      uint64_t w = a.low_word();
      for (uint64_t m : words_) v ^= (m & w) == m;
    } else {
      for (const Assignment& m : masks_) v ^= (m & a) == m;
    }
    return v;
  }
  void add(const Monomial& M) {
    Assignment m(f_.arity());
    for (int i : M.vars) m.set(i, true);
    words_.push_back(m.low_word());
    masks_.push_back(std::move(m));
  }

 private:
  Oracle& f_;
  std::vector<uint64_t> words_;
  std::vector<Assignment> masks_;
};

}  // namespace

MultivariatePoly learn_mp(Oracle& f, int N, int d, std::size_t s,
                          LearnMpStats* stats) {
  if (f.arity() != N) throw DimensionError("learn_mp arity != N");
  if (d < 0) throw ParameterError("learn_mp needs d >= 0");
  const BinaryDesign Z = zero_test_set(N, std::min(d, N));
  MultivariatePoly found(N);
  SumOracle residual(f);
  if (stats) stats->zero_test_size = Z.size();
  while (true) {
    LearnMonomialStats round;
    auto M = learn_monomial(residual, N, d, Z, &round);
    if (stats) {
      stats->zero_tests += round.zero_tests;
      stats->rounds.push_back(round);
    }
    if (!M) return found;
    if (found.contains(*M) || found.size() >= s) {
      throw InvariantError("learn_mp found more than s monomials");
    }
    found.toggle(*M);
    residual.add(*M);
  }
}

}  // namespace dtl
