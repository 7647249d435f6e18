#include "scma/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace scma {

ChannelRealization draw_channel(const SystemConfig& cfg, Rng& rng) {
  ChannelRealization ch;
  ch.beta = cfg.beta.empty() ? std::vector<double>(cfg.N, 1.0) : cfg.beta;
  ch.H.resize(cfg.J, cfg.N);
  for (int n = 0; n < cfg.N; ++n) {
    const double scale = std::sqrt(ch.beta[n]);
    for (int j = 0; j < cfg.J; ++j) {
      ch.H(j, n) = scale * rng.cnormal(1.0);
    }
  }
  return ch;
}

double snr_to_sigma2(double snr_db, double P) {
  if (!(P > 0.0)) throw std::invalid_argument("P must be positive");
  return P / std::pow(10.0, snr_db / 10.0);
}

ReceivedMatrix apply_channel(const ChannelRealization& ch,
                             const SignalMatrix& X, double sigma2, Rng& rng) {
  if (ch.H.cols() != X.entries.rows()) {
    throw std::invalid_argument("channel/signal dimension mismatch");
  }
  ReceivedMatrix out;
  out.sigma2 = sigma2;
  out.Y = ch.H * X.entries;
  if (sigma2 > 0.0) {
    for (Eigen::Index l = 0; l < out.Y.cols(); ++l) {
      for (Eigen::Index j = 0; j < out.Y.rows(); ++j) {
        out.Y(j, l) += rng.cnormal(sigma2);
      }
    }
  }
  return out;
}

}  // namespace scma
