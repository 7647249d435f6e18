#pragma once

#include <vector>

#include "scma/codebook.hpp"
#include "scma/model.hpp"
#include "scma/rng.hpp"
#include "scma/types.hpp"

namespace scma {

struct UserSignature {
  int user_id = -1;
  CVec symbols;  // length K, exactly d_f nonzeros, constellation-valued
};

struct SignalMatrix {
  CMat entries;  // N x L
  FrameLayout layout;
};

// The known nonzero pilot symbol: constellation point at angle 0.
cplx build_symbol_label(const Constellation& c);

// Deterministic per user_id; all N signatures are pairwise separated by at
// least the constellation amplitude (the derivation seed is bumped and all
// signatures rebuilt if any pair collides).
UserSignature build_user_signature(int user_id, const SystemConfig& cfg,
                                   const Constellation& c);
std::vector<UserSignature> build_all_signatures(const SystemConfig& cfg,
                                                const Constellation& c);

// payload_bits length must be I * d_f * bits_per_symbol
CVec build_frame(int user_id, const Bits& payload_bits,
                 const SystemConfig& cfg, const Constellation& c, Rng& rng);

SignalMatrix build_signal_matrix(const std::vector<Bits>& payloads,
                                 const SystemConfig& cfg,
                                 const Constellation& c, Rng& rng);

}  // namespace scma
