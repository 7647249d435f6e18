#include "scma/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace scma {

namespace {

int bits_to_int(const Bits& bits) {
  int v = 0;
  for (auto b : bits) v = (v << 1) | (b & 1);
  return v;
}

Bits int_to_bits(int v, int width) {
  Bits bits(width);
  for (int i = 0; i < width; ++i) bits[i] = (v >> (width - 1 - i)) & 1;
  return bits;
}

int gray(int k) { return k ^ (k >> 1); }

int gray_inverse(int g) {
  int k = 0;
  for (; g; g >>= 1) k ^= g;
  return k;
}

}  // namespace

Constellation build_constellation(int M, double P, double gamma) {
  if (M < 2 || (M & (M - 1)) != 0) {
    throw std::invalid_argument("M must be a power of 2, >= 2");
  }
  if (!(P > 0.0) || !(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("require P > 0 and gamma in (0,1]");
  }
  Constellation c;
  c.amplitude = std::sqrt(P / gamma);
  c.bits_per_symbol = static_cast<int>(std::lround(std::log2(M)));
  c.points.resize(M);
  for (int k = 0; k < M; ++k) {
    const double th = 2.0 * std::numbers::pi * k / M;
    c.points[k] = cplx(c.amplitude * std::cos(th), c.amplitude * std::sin(th));
  }
  return c;
}

cplx bits_to_symbol(const Bits& bits, const Constellation& c) {
  if (static_cast<int>(bits.size()) != c.bits_per_symbol) {
    throw std::invalid_argument("wrong bit-vector length");
  }
  return c.points[gray_inverse(bits_to_int(bits))];
}

int symbol_index(cplx s, const Constellation& c) {
  const double tol = 1e-9 * c.amplitude;
  for (int k = 0; k < static_cast<int>(c.points.size()); ++k) {
    if (std::abs(s - c.points[k]) <= tol) return k;
  }
  throw std::invalid_argument("symbol is not a constellation point");
}

Bits symbol_to_bits(cplx s, const Constellation& c) {
  return int_to_bits(gray(symbol_index(s, c)), c.bits_per_symbol);
}

Support draw_support(int K, int d_f, Rng& rng) {
  if (d_f > K) throw std::invalid_argument("d_f > K");
  // partial Fisher-Yates, then sort the chosen prefix
  std::vector<int> pool(K);
  for (int i = 0; i < K; ++i) pool[i] = i;
  for (int i = 0; i < d_f; ++i) {
    const int j = i + rng.randint(K - i);
    std::swap(pool[i], pool[j]);
  }
  Support s;
  s.indices.assign(pool.begin(), pool.begin() + d_f);
  std::sort(s.indices.begin(), s.indices.end());
  return s;
}

}  // namespace scma
