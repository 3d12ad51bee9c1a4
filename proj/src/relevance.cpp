#include "dtlearn/relevance.hpp"

#include <algorithm>
#include <ostream>

#include "dtlearn/designs.hpp"

namespace dtl {

void RelevantSet::add(int var, Assignment a, Assignment b) {
  auto it = std::lower_bound(vars.begin(), vars.end(), var);
  if (it == vars.end() || *it != var) vars.insert(it, var);
  witnesses.insert_or_assign(var, std::make_pair(std::move(a), std::move(b)));
}

bool RelevantSet::contains(int var) const {
  return std::binary_search(vars.begin(), vars.end(), var);
}

void write_relevant(std::ostream& out, const RelevantSet& r) {
  out << "vars:";
  for (int v : r.vars) out << ' ' << v;
  out << '\n';
  for (const auto& [v, w] : r.witnesses) {
    out << v << ' ' << w.first.to_string() << ' ' << w.second.to_string() << '\n';
  }
}

BinarySearchResult binary_learn_variable(Oracle& f, const Assignment& a,
                                         const Assignment& b, bool fa, bool fb) {
  if (a.size() != b.size() || a.size() != f.arity()) {
    throw DimensionError("binary_learn_variable dimension mismatch");
  }
  if (fa == fb) throw ContractError("binary_learn_variable needs f(a) != f(b)");
  BinarySearchResult r{0, a, b, 0};
  std::vector<int> diff = (a ^ b).ones();
  if (diff.empty()) throw ContractError("binary_learn_variable needs a != b");
  while (diff.size() > 1) {
    const std::size_t half = diff.size() / 2;
    Assignment c = r.a;
    for (std::size_t k = 0; k < half; ++k) c.flip(diff[k]);
    ++r.queries;
    if (f.ask(c) != fa) {
      r.b = std::move(c);
      diff.resize(half);
    } else {
      r.a = std::move(c);
      diff.erase(diff.begin(), diff.begin() + static_cast<std::ptrdiff_t>(half));
    }
  }
  r.var = diff.front();
  return r;
}

int learn_variable_nonadaptive(Oracle& f, int n) {
  if (n < 1 || f.arity() != n) throw DimensionError("learn_variable arity != n");
  const int q = ceil_log2(static_cast<uint64_t>(n));
  uint64_t code = 0;
  for (int i = 0; i < q; ++i) {
    Assignment a(n);
    for (int j = 1; j <= n; ++j) {
      if (((j - 1) >> i) & 1) a.set(j, true);
    }
    if (f.ask(a)) code |= uint64_t{1} << i;
  }
  if (code >= static_cast<uint64_t>(n)) {
    throw ContractError("decoded variable index out of range");
  }
  return static_cast<int>(code) + 1;
}

RelevantSet find_relevant(Oracle& f, int n, int d, FindRelevantStats* stats) {
  if (f.arity() != n) throw DimensionError("find_relevant arity != n");
  if (d < 0) throw ParameterError("find_relevant needs d >= 0");
  RelevantSet R;
  if (n == 0) return R;
  const int strength = std::min(2 * d + 1, n);
  auto S = shared_universal_disjoint_set(n, strength);
  FindRelevantStats local;
  FindRelevantStats& st = stats ? *stats : local;
  st.design_size = S->size();
  st.design_strength = strength;

  Assignment known(n);
  for (const TernaryPattern& row : S->rows) {
    // Free positions of known relevant variables are pinned to zero.
    Assignment free = row.free() & ~known;
    Assignment x0 = row.ones();
    Assignment x1 = row.ones() | free;
    st.design_queries += 2;
    bool v1 = f.ask(x1);
    bool v0 = f.ask(x0);
    if (v1 == v0) continue;
    BinarySearchResult r = binary_learn_variable(f, x1, x0, v1, v0);
    ++st.invocations;
    st.binary_queries += r.queries;
    st.max_invocation_queries = std::max(st.max_invocation_queries, r.queries);
    known.set(r.var, true);
    R.add(r.var, std::move(r.a), std::move(r.b));
  }
  return R;
}

}  // namespace dtl
