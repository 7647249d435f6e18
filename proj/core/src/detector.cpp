#include "scma/detector.hpp"

#include <algorithm>
#include <stdexcept>

#include "scma/assignment.hpp"

namespace scma {

CVec threshold_row(const CVec& row, double tau) {
  CVec out = row;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::abs(out(i)) < tau) out(i) = cplx(0.0, 0.0);
  }
  return out;
}

PhaseCorrection phase_correct(const CVec& thresholded_row, cplx x0,
                              const FrameLayout& layout,
                              bool literal_first_nonzero) {
  PhaseCorrection pc;
  cplx pivot(0.0, 0.0);
  if (!literal_first_nonzero &&
      thresholded_row(layout.label_index()) != cplx(0.0, 0.0)) {
    pivot = thresholded_row(layout.label_index());
  } else {
    for (Eigen::Index i = 0; i < thresholded_row.size(); ++i) {
      if (thresholded_row(i) != cplx(0.0, 0.0)) {
        pivot = thresholded_row(i);
        break;
      }
    }
  }
  if (pivot == cplx(0.0, 0.0)) {
    pc.corrected = CVec::Zero(thresholded_row.size());
    return pc;  // all-zero row: unidentifiable
  }
  pc.ok = true;
  pc.phi = x0 / pivot;
  pc.corrected = pc.phi * thresholded_row;
  return pc;
}

std::vector<int> match_users(const std::vector<CVec>& corrected_rows,
                             const std::vector<UserSignature>& signatures,
                             const FrameLayout& layout) {
  const int n = static_cast<int>(corrected_rows.size());
  if (n != static_cast<int>(signatures.size())) {
    throw std::invalid_argument("row/signature count mismatch");
  }
  RMat cost(n, n);
  for (int r = 0; r < n; ++r) {
    const CVec span =
        corrected_rows[r].segment(layout.signature_begin(), layout.K);
    for (int u = 0; u < n; ++u) {
      cost(r, u) = (span - signatures[u].symbols).squaredNorm();
    }
  }
  return hungarian(cost);
}

CVec hard_decision(const CVec& span, const Constellation& c) {
  CVec out = span;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) == cplx(0.0, 0.0)) continue;
    int best = 0;
    double best_d = std::abs(out(i) - c.points[0]);
    for (int k = 1; k < static_cast<int>(c.points.size()); ++k) {
      const double d = std::abs(out(i) - c.points[k]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    out(i) = c.points[best];
  }
  return out;
}

DemodResult demodulate(const CVec& hard_span, const CVec& raw_span,
                       const Constellation& c, int d_f, int K) {
  if (hard_span.size() % K != 0) {
    throw std::invalid_argument("data span length must be a multiple of K");
  }
  const int blocks = static_cast<int>(hard_span.size()) / K;
  DemodResult res;
  res.bits.reserve(blocks * d_f * c.bits_per_symbol);
  std::vector<int> idx(K);
  for (int b = 0; b < blocks; ++b) {
    std::vector<int> nz;
    for (int k = 0; k < K; ++k) {
      if (hard_span(b * K + k) != cplx(0.0, 0.0)) nz.push_back(k);
    }
    if (static_cast<int>(nz.size()) != d_f) {
      // fallback: d_f largest-magnitude pre-threshold entries of this block
      ++res.flagged_blocks;
      for (int k = 0; k < K; ++k) idx[k] = k;
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int bb) {
        return std::abs(raw_span(b * K + a)) > std::abs(raw_span(b * K + bb));
      });
      nz.assign(idx.begin(), idx.begin() + d_f);
      std::sort(nz.begin(), nz.end());
    }
    for (int k : nz) {
      cplx sym = hard_span(b * K + k);
      if (sym == cplx(0.0, 0.0)) {
        // fallback entry that was thresholded away: hard-decide the raw value
        const CVec one = hard_decision(raw_span.segment(b * K + k, 1), c);
        sym = one(0);
      }
      if (sym == cplx(0.0, 0.0)) {
        // nothing recoverable (e.g. a fully zeroed row): decide the
        // lowest-index point so the bit string stays well formed
        sym = c.points[0];
      }
      const Bits sym_bits = symbol_to_bits(sym, c);
      res.bits.insert(res.bits.end(), sym_bits.begin(), sym_bits.end());
    }
  }
  return res;
}

DetectionResult detect(const CMat& x_hat, const SystemConfig& cfg,
                       const Constellation& c,
                       const std::vector<UserSignature>& signatures,
                       const DetectorOptions& opts) {
  const FrameLayout layout = cfg.layout();
  const double tau = opts.tau > 0.0 ? opts.tau : c.amplitude / 2.0;
  if (tau >= c.amplitude) {
    throw std::invalid_argument("tau must be below the constellation amplitude");
  }
  const cplx x0 = build_symbol_label(c);
  const int n = cfg.N;

  std::vector<CVec> corrected(n), corrected_raw(n);
  std::vector<cplx> row_phi(n, cplx(0.0, 0.0));
  for (int r = 0; r < n; ++r) {
    const CVec row = x_hat.row(r).transpose();
    const CVec thr = threshold_row(row, tau);
    const PhaseCorrection pc =
        phase_correct(thr, x0, layout, opts.literal_first_nonzero);
    corrected[r] = pc.corrected;
    corrected_raw[r] = pc.ok ? CVec(pc.phi * row) : CVec(CVec::Zero(row.size()));
    row_phi[r] = pc.phi;
  }

  const std::vector<int> row_to_user = match_users(corrected, signatures, layout);
  const double id_threshold = cfg.d_f * c.amplitude * c.amplitude / 4.0;

  DetectionResult out;
  out.assignment = row_to_user;
  out.phase.assign(n, cplx(0.0, 0.0));
  out.id_success.assign(n, 0);
  out.bits.assign(n, Bits{});
  out.symbols = CMat::Zero(n, layout.data_length());

  for (int r = 0; r < n; ++r) {
    const int u = row_to_user[r];
    const CVec span = corrected[r].segment(layout.data_begin(), layout.data_length());
    const CVec sig_span = corrected[r].segment(layout.signature_begin(), layout.K);
    const double cost = (sig_span - signatures[u].symbols).squaredNorm();
    const CVec hard = hard_decision(span, c);
    const CVec raw =
        corrected_raw[r].segment(layout.data_begin(), layout.data_length());
    const DemodResult dm = demodulate(hard, raw, c, cfg.d_f, cfg.K);

    out.phase[u] = row_phi[r];
    out.symbols.row(u) = hard.transpose();
    out.bits[u] = dm.bits;
    out.flagged_blocks += dm.flagged_blocks;
    out.id_success[u] = (row_phi[r] != cplx(0.0, 0.0) && cost < id_threshold) ? 1 : 0;
  }
  return out;
}

}  // namespace scma
