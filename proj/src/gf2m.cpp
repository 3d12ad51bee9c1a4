#include "dtlearn/gf2m.hpp"

#include <array>
#include <bit>
#include <mutex>

#include "dtlearn/errors.hpp"

namespace dtl {

namespace {

int poly_degree(uint64_t p) { return 63 - std::countl_zero(p); }

uint64_t poly_mod(uint64_t a, uint64_t m) {
  int dm = poly_degree(m);
  while (a != 0 && poly_degree(a) >= dm) a ^= m << (poly_degree(a) - dm);
  return a;
}

}  // namespace

bool is_irreducible(uint64_t poly) {
  if (poly < 2) return false;
  int deg = poly_degree(poly);
  if (deg > 32) throw ParameterError("irreducibility test limited to degree 32");
  // Trial division by every polynomial of degree 1..deg/2.
  for (int dd = 1; 2 * dd <= deg; ++dd) {
    for (uint64_t q = uint64_t{1} << dd; q < (uint64_t{2} << dd); ++q) {
      if (poly_mod(poly, q) == 0) return false;
    }
  }
  return true;
}

uint64_t smallest_irreducible(int degree) {
  if (degree < 1 || degree > 32) throw ParameterError("field degree out of range");
  static std::array<uint64_t, 33> memo{};
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  if (memo[degree] != 0) return memo[degree];
  for (uint64_t p = (uint64_t{1} << degree) | 1;; p += 2) {
    if (is_irreducible(p)) return memo[degree] = p;
  }
}

GF2m::GF2m(int w) : w_(w), mod_(smallest_irreducible(w)) {}

uint64_t GF2m::mul(uint64_t a, uint64_t b) const {
  uint64_t r = 0;
  while (b) {
    if (b & 1) r ^= a;
    b >>= 1;
    a <<= 1;
    if (a >> w_) a ^= mod_;
  }
  return r;
}

uint64_t GF2m::pow(uint64_t a, uint64_t e) const {
  uint64_t r = 1;
  while (e) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

}  // namespace dtl
