#pragma once

#include <vector>

#include "scma/codebook.hpp"
#include "scma/model.hpp"
#include "scma/txframe.hpp"
#include "scma/types.hpp"

namespace scma {

struct DetectorOptions {
  double tau = 0.0;  // <= 0 selects the default amplitude/2
  // Pivot for the phase correction: the label position when it survives
  // thresholding (default), or the literal first nonzero entry.
  bool literal_first_nonzero = false;
};

struct DetectionResult {
  std::vector<int> assignment;    // recovered row -> user id
  std::vector<cplx> phase;        // per user: correction factor of its row
  CMat symbols;                   // per user: hard-decided data span (N x K*I)
  std::vector<Bits> bits;         // per user
  std::vector<std::uint8_t> id_success;  // per user
  int flagged_blocks = 0;         // data blocks that needed the fallback
};

// Stage-by-stage pieces (exposed for tests), then the composite `detect`.
CVec threshold_row(const CVec& row, double tau);

struct PhaseCorrection {
  bool ok = false;
  cplx phi{0.0, 0.0};
  CVec corrected;
};
PhaseCorrection phase_correct(const CVec& thresholded_row, cplx x0,
                              const FrameLayout& layout,
                              bool literal_first_nonzero = false);

std::vector<int> match_users(const std::vector<CVec>& corrected_rows,
                             const std::vector<UserSignature>& signatures,
                             const FrameLayout& layout);

CVec hard_decision(const CVec& span, const Constellation& c);

struct DemodResult {
  Bits bits;
  int flagged_blocks = 0;
};
// hard_span: hard-decided thresholded data span; raw_span: phase-corrected
// but unthresholded data span, used by the fallback when a block's nonzero
// count differs from d_f.
DemodResult demodulate(const CVec& hard_span, const CVec& raw_span,
                       const Constellation& c, int d_f, int K);

DetectionResult detect(const CMat& x_hat, const SystemConfig& cfg,
                       const Constellation& c,
                       const std::vector<UserSignature>& signatures,
                       const DetectorOptions& opts = {});

}  // namespace scma
