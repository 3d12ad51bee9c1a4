#pragma once

#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "dtlearn/core.hpp"

namespace dtl {

struct RelevantSet {
  std::vector<int> vars;  // sorted
  // var -> (a, b) differing only at var, with f(a) != f(b)
  std::map<int, std::pair<Assignment, Assignment>> witnesses;

  void add(int var, Assignment a, Assignment b);
  bool contains(int var) const;
};

// "vars: 2 5" then one "i a b" line per witness.
void write_relevant(std::ostream& out, const RelevantSet& r);

struct BinarySearchResult {
  int var = 0;
  Assignment a;
  Assignment b;
  uint64_t queries = 0;
};

// Halves the set of coordinates where a and b differ until one is left.
// fa = f(a) and fb = f(b) are supplied by the caller and must differ.
BinarySearchResult binary_learn_variable(Oracle& f, const Assignment& a,
                                         const Assignment& b, bool fa, bool fb);

// f is promised to be a positive literal x_l; asks ceil(log2 n) fixed queries
// whose answers spell l-1 in binary, least significant bit first.
int learn_variable_nonadaptive(Oracle& f, int n);

struct FindRelevantStats {
  std::size_t design_size = 0;
  int design_strength = 0;
  uint64_t design_queries = 0;
  uint64_t binary_queries = 0;
  int invocations = 0;
  uint64_t max_invocation_queries = 0;
};

// Every relevant variable of f in DT_d, with witnesses, from one pass over
// a universal disjoint set of strength 2d+1.
RelevantSet find_relevant(Oracle& f, int n, int d,
                          FindRelevantStats* stats = nullptr);

}  // namespace dtl
