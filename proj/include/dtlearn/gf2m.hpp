#pragma once

#include <cstdint>

namespace dtl {

// Arithmetic in GF(2^w), w in [1, 32], modulo the smallest irreducible
// polynomial of degree w. Elements are bit vectors in the low w bits.
class GF2m {
 public:
  explicit GF2m(int w);

  int degree() const { return w_; }
  uint64_t modulus() const { return mod_; }
  uint64_t order() const { return uint64_t{1} << w_; }

  uint64_t mul(uint64_t a, uint64_t b) const;
  uint64_t pow(uint64_t a, uint64_t e) const;

 private:
  int w_;
  uint64_t mod_;
};

// Polynomial over GF(2), bit k = coefficient of x^k.
bool is_irreducible(uint64_t poly);
uint64_t smallest_irreducible(int degree);

}  // namespace dtl
