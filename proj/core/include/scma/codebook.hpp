#pragma once

#include <vector>

#include "scma/rng.hpp"
#include "scma/types.hpp"

namespace scma {

// M-PSK of amplitude sqrt(P/gamma), angle-ascending from the positive real
// axis, Gray-labeled.
struct Constellation {
  std::vector<cplx> points;
  int bits_per_symbol = 0;
  double amplitude = 0.0;
};

struct Support {
  std::vector<int> indices;  // d_f distinct positions in [0, K), ascending
};

Constellation build_constellation(int M, double P, double gamma);

// bits are MSB-first; Gray label g maps to point index k with g = k ^ (k>>1)
cplx bits_to_symbol(const Bits& bits, const Constellation& c);
Bits symbol_to_bits(cplx s, const Constellation& c);

// index of the exact constellation point (throws if s is not a point)
int symbol_index(cplx s, const Constellation& c);

Support draw_support(int K, int d_f, Rng& rng);

}  // namespace scma
