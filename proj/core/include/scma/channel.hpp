#pragma once

#include "scma/model.hpp"
#include "scma/rng.hpp"
#include "scma/txframe.hpp"
#include "scma/types.hpp"

namespace scma {

// Quasi-static flat Rayleigh fading: column n is sqrt(beta_n) * g_n with
// g i.i.d. CN(0,1); constant across the frame.
struct ChannelRealization {
  CMat H;  // J x N
  std::vector<double> beta;
};

struct ReceivedMatrix {
  CMat Y;  // J x L
  double sigma2 = 0.0;
};

ChannelRealization draw_channel(const SystemConfig& cfg, Rng& rng);

// sigma2 = P / 10^(snr_db/10)
double snr_to_sigma2(double snr_db, double P);

ReceivedMatrix apply_channel(const ChannelRealization& ch,
                             const SignalMatrix& X, double sigma2, Rng& rng);

}  // namespace scma
