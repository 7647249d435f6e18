#pragma once

#include <string>
#include <vector>

#include "scma/types.hpp"

namespace scma {

enum class SupportMode { per_symbol, per_frame };

// All scalar system parameters. gamma, L and the overload factor are derived.
struct SystemConfig {
  int K = 0;    // subcarriers
  int N = 0;    // active users
  int J = 0;    // antennas
  int I = 0;    // data symbols per frame
  int d_f = 0;  // nonzero subcarriers per codeword
  int d_v = 0;  // users per subcarrier
  int M = 0;    // constellation size
  double P = 1.0;
  double sigma2 = 0.0;
  std::vector<double> beta;  // per-user path loss, defaults to all ones
  double beta_bar = 1.0;
  SupportMode support_mode = SupportMode::per_symbol;

  double gamma() const { return static_cast<double>(d_f) / K; }
  double overload() const { return static_cast<double>(d_v) / d_f; }
  int L() const { return K * I + K + 1; }
  FrameLayout layout() const { return FrameLayout{K, I}; }
};

// Throws std::invalid_argument on any violated invariant; fills the default
// all-ones beta when the vector is empty. Idempotent.
SystemConfig validate_config(SystemConfig cfg);

// Builds a config from the sparsity level: K = d_f/gamma, N = d_v/gamma
// (both must be exact integers), J defaults to N.
SystemConfig make_config(double gamma, int d_f, int d_v, int I, int M,
                         double P = 1.0, int J = -1);

// Flat `key = value` file, one pair per line, '#' comments. Keys are the
// SystemConfig field names; `beta` takes a comma-separated list.
SystemConfig load_config_file(const std::string& path);

SupportMode parse_support_mode(const std::string& s);
std::string to_string(SupportMode m);

}  // namespace scma
