#include "scma/txframe.hpp"

#include <stdexcept>

namespace scma {

namespace {

constexpr std::uint64_t kSignatureSeed = 12345;

std::vector<UserSignature> build_signature_set(const SystemConfig& cfg,
                                               const Constellation& c,
                                               std::uint64_t seed) {
  std::vector<UserSignature> sigs(cfg.N);
  for (int u = 0; u < cfg.N; ++u) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(u)}));
    Support sup = draw_support(cfg.K, cfg.d_f, rng);
    UserSignature s;
    s.user_id = u;
    s.symbols = CVec::Zero(cfg.K);
    for (int idx : sup.indices) {
      s.symbols(idx) = c.points[rng.randint(static_cast<int>(c.points.size()))];
    }
    sigs[u] = std::move(s);
  }
  return sigs;
}

bool separated(const std::vector<UserSignature>& sigs, double min_dist) {
  for (std::size_t a = 0; a + 1 < sigs.size(); ++a) {
    for (std::size_t b = a + 1; b < sigs.size(); ++b) {
      if ((sigs[a].symbols - sigs[b].symbols).norm() < min_dist) return false;
    }
  }
  return true;
}

}  // namespace

cplx build_symbol_label(const Constellation& c) { return c.points[0]; }

std::vector<UserSignature> build_all_signatures(const SystemConfig& cfg,
                                                const Constellation& c) {
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    auto sigs = build_signature_set(cfg, c, kSignatureSeed + attempt);
    if (separated(sigs, c.amplitude)) return sigs;
  }
  throw std::runtime_error("could not build collision-free signatures");
}

UserSignature build_user_signature(int user_id, const SystemConfig& cfg,
                                   const Constellation& c) {
  if (user_id < 0 || user_id >= cfg.N) {
    throw std::invalid_argument("user_id out of range");
  }
  return build_all_signatures(cfg, c)[user_id];
}

CVec build_frame(int user_id, const Bits& payload_bits,
                 const SystemConfig& cfg, const Constellation& c, Rng& rng) {
  const int bps = c.bits_per_symbol;
  const int expected = cfg.I * cfg.d_f * bps;
  if (static_cast<int>(payload_bits.size()) != expected) {
    throw std::invalid_argument("payload must have I*d_f*log2(M) bits");
  }
  const FrameLayout layout = cfg.layout();
  CVec frame = CVec::Zero(layout.length());
  frame(layout.label_index()) = build_symbol_label(c);
  const UserSignature sig = build_user_signature(user_id, cfg, c);
  frame.segment(layout.signature_begin(), cfg.K) = sig.symbols;

  Support frame_support;
  if (cfg.support_mode == SupportMode::per_frame) {
    frame_support = draw_support(cfg.K, cfg.d_f, rng);
  }
  int bit_pos = 0;
  for (int i = 0; i < cfg.I; ++i) {
    const Support sup = (cfg.support_mode == SupportMode::per_frame)
                            ? frame_support
                            : draw_support(cfg.K, cfg.d_f, rng);
    const int block = layout.data_begin() + i * cfg.K;
    for (int idx : sup.indices) {
      Bits b(payload_bits.begin() + bit_pos, payload_bits.begin() + bit_pos + bps);
      frame(block + idx) = bits_to_symbol(b, c);
      bit_pos += bps;
    }
  }
  const double avg_power = frame.squaredNorm() / layout.length();
  if (avg_power > cfg.P * 1.25 + 1e-12) {
    throw std::runtime_error("frame exceeds the power budget (eta = 0.25)");
  }
  return frame;
}

SignalMatrix build_signal_matrix(const std::vector<Bits>& payloads,
                                 const SystemConfig& cfg,
                                 const Constellation& c, Rng& rng) {
  if (static_cast<int>(payloads.size()) != cfg.N) {
    throw std::invalid_argument("need exactly N payloads");
  }
  SignalMatrix X;
  X.layout = cfg.layout();
  X.entries = CMat::Zero(cfg.N, X.layout.length());
  for (int n = 0; n < cfg.N; ++n) {
    X.entries.row(n) = build_frame(n, payloads[n], cfg, c, rng).transpose();
  }
  return X;
}

}  // namespace scma
