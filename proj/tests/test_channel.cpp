#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "scma/channel.hpp"
#include "scma/txframe.hpp"

using namespace scma;

namespace {
SystemConfig cfg_small() {
  SystemConfig c;
  c.K = 8;
  c.N = 12;
  c.J = 16;
  c.I = 4;
  c.d_f = 2;
  c.d_v = 3;
  c.M = 4;
  c.P = 1.0;
  return validate_config(c);
}
}  // namespace

TEST_CASE("snr_to_sigma2: frozen reference values") {
  CHECK(snr_to_sigma2(17.5, 1.0) ==
        doctest::Approx(0.017782794100389228).epsilon(1e-15));
  CHECK(snr_to_sigma2(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(snr_to_sigma2(10.0, 1.0) == doctest::Approx(0.1));
  CHECK(snr_to_sigma2(10.0, 2.0) == doctest::Approx(0.2));
  CHECK(snr_to_sigma2(-10.0, 1.0) == doctest::Approx(10.0));
}

TEST_CASE("draw_channel: dimensions and per-user variance scaling") {
  SystemConfig cfg = cfg_small();
  cfg.beta.assign(cfg.N, 1.0);
  cfg.beta[3] = 4.0;
  cfg.beta_bar = (11.0 + 4.0) / 12.0;
  cfg = validate_config(cfg);

  Rng rng(21);
  double p3 = 0.0, p0 = 0.0;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const ChannelRealization ch = draw_channel(cfg, rng);
    REQUIRE(ch.H.rows() == cfg.J);
    REQUIRE(ch.H.cols() == cfg.N);
    p0 += ch.H.col(0).squaredNorm() / cfg.J;
    p3 += ch.H.col(3).squaredNorm() / cfg.J;
  }
  CHECK(p0 / reps == doctest::Approx(1.0).epsilon(0.05));
  CHECK(p3 / reps == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("apply_channel: exact product when noiseless, noise power else") {
  const SystemConfig cfg = cfg_small();
  const Constellation c = build_constellation(cfg.M, cfg.P, cfg.gamma());
  Rng rng(33);
  std::vector<Bits> payloads(cfg.N);
  for (auto& p : payloads) {
    p.resize(cfg.I * cfg.d_f * c.bits_per_symbol);
    for (auto& b : p) b = rng.bit();
  }
  const SignalMatrix X = build_signal_matrix(payloads, cfg, c, rng);
  const ChannelRealization ch = draw_channel(cfg, rng);

  const ReceivedMatrix clean = apply_channel(ch, X, 0.0, rng);
  CHECK((clean.Y - ch.H * X.entries).norm() == doctest::Approx(0.0));
  CHECK(clean.sigma2 == 0.0);

  const double sigma2 = 0.05;
  const ReceivedMatrix noisy = apply_channel(ch, X, sigma2, rng);
  CHECK(noisy.sigma2 == doctest::Approx(sigma2));
  const double zp = (noisy.Y - ch.H * X.entries).squaredNorm() /
                    (cfg.J * cfg.L());
  CHECK(zp == doctest::Approx(sigma2).epsilon(0.05));
}

TEST_CASE("apply_channel rejects mismatched dimensions") {
  const SystemConfig cfg = cfg_small();
  const Constellation c = build_constellation(cfg.M, cfg.P, cfg.gamma());
  Rng rng(5);
  std::vector<Bits> payloads(cfg.N);
  for (auto& p : payloads) p.assign(cfg.I * cfg.d_f * c.bits_per_symbol, 0);
  SignalMatrix X = build_signal_matrix(payloads, cfg, c, rng);
  ChannelRealization ch = draw_channel(cfg, rng);
  ch.H.conservativeResize(cfg.J, cfg.N - 1);
  CHECK_THROWS_AS(apply_channel(ch, X, 0.0, rng), std::invalid_argument);
}
