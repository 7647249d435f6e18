#include "scma/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scma {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

SystemConfig validate_config(SystemConfig cfg) {
  if (cfg.K <= 0 || cfg.N <= 0 || cfg.J <= 0 || cfg.I <= 0) {
    fail("K, N, J, I must be positive");
  }
  if (cfg.d_f <= 0 || cfg.d_v < 0) fail("d_f must be positive, d_v nonnegative");
  if (cfg.d_f > cfg.K) fail("d_f must not exceed K");
  if (!is_power_of_two(cfg.M) || cfg.M < 2) fail("M must be a power of 2, >= 2");
  if (cfg.P <= 0.0) fail("P must be positive");
  if (cfg.sigma2 < 0.0) fail("sigma2 must be nonnegative");
  const double g = cfg.gamma();
  if (!(g > 0.0 && g < 1.0)) fail("gamma = d_f/K must lie in (0,1)");
  // N = d_v/gamma exactly  <=>  N*d_f == d_v*K. d_v = 0 leaves the user/
  // subcarrier coupling unconstrained (small oracle instances need this).
  if (cfg.d_v > 0 && cfg.N * cfg.d_f != cfg.d_v * cfg.K) {
    fail("N must equal d_v/gamma exactly (N*d_f == d_v*K)");
  }
  if (cfg.J < cfg.N) fail("J >= N required");
  if (cfg.beta.empty()) cfg.beta.assign(cfg.N, 1.0);
  if (static_cast<int>(cfg.beta.size()) != cfg.N) fail("beta must have N entries");
  double mean = 0.0;
  for (double b : cfg.beta) {
    if (b <= 0.0) fail("beta entries must be positive");
    mean += b;
  }
  mean /= cfg.N;
  if (std::abs(mean - cfg.beta_bar) > 1e-9 * std::max(1.0, std::abs(mean))) {
    fail("beta_bar must equal the mean of beta");
  }
  return cfg;
}

SystemConfig make_config(double gamma, int d_f, int d_v, int I, int M,
                         double P, int J) {
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0,1)");
  const double Kf = d_f / gamma;
  const double Nf = d_v / gamma;
  const int K = static_cast<int>(std::lround(Kf));
  const int N = static_cast<int>(std::lround(Nf));
  if (std::abs(Kf - K) > 1e-9 * Kf) fail("K = d_f/gamma is not an integer");
  if (std::abs(Nf - N) > 1e-9 * Nf) fail("N = d_v/gamma is not an integer");
  SystemConfig cfg;
  cfg.K = K;
  cfg.N = N;
  cfg.J = (J > 0) ? J : N;
  cfg.I = I;
  cfg.d_f = d_f;
  cfg.d_v = d_v;
  cfg.M = M;
  cfg.P = P;
  return validate_config(cfg);
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  SystemConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("malformed config line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "K") cfg.K = std::stoi(val);
    else if (key == "N") cfg.N = std::stoi(val);
    else if (key == "J") cfg.J = std::stoi(val);
    else if (key == "I") cfg.I = std::stoi(val);
    else if (key == "d_f") cfg.d_f = std::stoi(val);
    else if (key == "d_v") cfg.d_v = std::stoi(val);
    else if (key == "M") cfg.M = std::stoi(val);
    else if (key == "P") cfg.P = std::stod(val);
    else if (key == "sigma2") cfg.sigma2 = std::stod(val);
    else if (key == "beta_bar") cfg.beta_bar = std::stod(val);
    else if (key == "support_mode") cfg.support_mode = parse_support_mode(val);
    else if (key == "beta") {
      cfg.beta.clear();
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.beta.push_back(std::stod(trim(tok)));
    } else {
      fail("unknown config key: " + key);
    }
  }
  return cfg;
}

SupportMode parse_support_mode(const std::string& s) {
  if (s == "per_symbol") return SupportMode::per_symbol;
  if (s == "per_frame") return SupportMode::per_frame;
  fail("support_mode must be per_symbol or per_frame");
  return SupportMode::per_symbol;
}

std::string to_string(SupportMode m) {
  return m == SupportMode::per_symbol ? "per_symbol" : "per_frame";
}

}  // namespace scma
