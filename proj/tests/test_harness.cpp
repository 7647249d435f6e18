#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scma/harness.hpp"

using namespace scma;

namespace {

// strip the trailing runtime_s column from every CSV line
std::string drop_runtime(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    const auto pos = line.rfind(',');
    os << line.substr(0, pos) << '\n';
  }
  return os.str();
}

BigAmpOptions tiny_opts() {
  BigAmpOptions o;
  o.strict_paper_variances = false;
  o.t_max = 600;
  o.phase_t_max = 400;
  o.repair_t_max = 200;
  o.max_repairs = 1;
  o.anneal_rho = 0.96;
  return o;
}

}  // namespace

TEST_CASE("trial seeds are pure functions of (master, point, trial)") {
  CHECK(trial_seed(1, 0, 0) == trial_seed(1, 0, 0));
  CHECK(trial_seed(1, 0, 0) != trial_seed(1, 0, 1));
  CHECK(trial_seed(1, 0, 0) != trial_seed(1, 1, 0));
  CHECK(trial_seed(1, 0, 0) != trial_seed(2, 0, 0));
  CHECK(trial_seed(1, 1, 0) != trial_seed(1, 0, 1));
}

TEST_CASE("build_trial is reproducible per seed") {
  const SystemConfig cfg = make_config(0.25, 2, 3, 6, 4);
  Rng r1(42), r2(42), r3(43);
  const TrialData a = build_trial(cfg, 0.01, r1);
  const TrialData b = build_trial(cfg, 0.01, r2);
  const TrialData c = build_trial(cfg, 0.01, r3);
  CHECK((a.rx.Y - b.rx.Y).norm() == 0.0);
  CHECK((a.X.entries - b.X.entries).norm() == 0.0);
  CHECK((a.rx.Y - c.rx.Y).norm() != 0.0);
  CHECK(a.payloads == b.payloads);
}

TEST_CASE("map_oracle recovers the exact frame on a noiseless instance") {
  SystemConfig cfg;
  cfg.K = 4;
  cfg.N = 3;
  cfg.J = 3;
  cfg.I = 2;
  cfg.d_f = 2;
  cfg.d_v = 0;
  cfg.M = 4;
  cfg.P = 1.0;
  cfg = validate_config(cfg);
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    Rng rng(seed);
    const TrialData d = build_trial(cfg, 0.0, rng);
    const CMat X = map_oracle(d.rx.Y, d.channel.H, cfg, d.constellation,
                              d.signatures);
    CHECK((X - d.X.entries).norm() <= 1e-9);
    const auto bits = frame_bits(X, cfg, d.constellation);
    REQUIRE(bits.size() == d.payloads.size());
    for (size_t n = 0; n < bits.size(); ++n) CHECK(bits[n] == d.payloads[n]);
  }
}

TEST_CASE("map_oracle refuses oversized searches") {
  SystemConfig cfg = make_config(0.25, 2, 3, 2, 4);  // N = 12 users
  const Constellation c = build_constellation(cfg.M, cfg.P, cfg.gamma());
  Rng rng(3);
  const TrialData d = build_trial(cfg, 0.0, rng);
  CHECK_THROWS_AS(
      map_oracle(d.rx.Y, d.channel.H, cfg, c, d.signatures),
      std::invalid_argument);
}

TEST_CASE("frame_bits reads payloads off the true signal matrix") {
  const SystemConfig cfg = make_config(0.25, 2, 3, 8, 4);
  Rng rng(77);
  const TrialData d = build_trial(cfg, 0.0, rng);
  const auto bits = frame_bits(d.X.entries, cfg, d.constellation);
  for (int n = 0; n < cfg.N; ++n) CHECK(bits[n] == d.payloads[n]);
}

TEST_CASE("run_trial scores a converged noiseless-ish trial") {
  const SystemConfig cfg = make_config(0.25, 2, 3, 20, 4);
  const TrialResult t = run_trial(cfg, 17.5, 5, tiny_opts(), DetectorOptions{});
  CHECK(t.seed == 5);
  CHECK(t.iters > 0);
  CHECK(t.ber >= 0.0);
  CHECK(t.ber <= 1.0);
  CHECK(t.id_error_rate >= 0.0);
  CHECK(t.id_error_rate <= 1.0);
}

TEST_CASE("sweep CSV: exact header, deterministic body across parallelism") {
  SweepOptions o;
  o.points = {{0.25, 17.5}, {0.25, 12.5}};
  o.I = 8;
  o.trials = 3;
  o.master_seed = 2024;
  o.bigamp = tiny_opts();
  o.bigamp.t_max = 150;       // speed over quality: determinism is the point
  o.bigamp.phase_t_max = 100;
  o.bigamp.repair_t_max = 50;

  o.parallelism = 1;
  const SweepResult r1 = sweep(o);
  o.parallelism = 4;
  const SweepResult r4 = sweep(o);

  const std::string csv1 = format_csv(r1);
  const std::string csv4 = format_csv(r4);
  CHECK(drop_runtime(csv1) == drop_runtime(csv4));

  std::istringstream is(csv1);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "gamma,K,N,J,I,snr_db,trials,ber,ci95,id_error_rate,mean_iters,"
        "runtime_s");
  int rows = 0;
  std::string line;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 2);

  // per-point fields propagate
  CHECK(r1.points[0].K == 8);
  CHECK(r1.points[0].N == 12);
  CHECK(r1.points[0].J == 12);
  CHECK(r1.points[0].trials == 3);
}

TEST_CASE("emit_csv writes the table and a JSON metadata sibling") {
  SweepOptions o;
  o.points = {{0.25, 17.5}};
  o.I = 6;
  o.trials = 2;
  o.master_seed = 7;
  o.bigamp = tiny_opts();
  o.bigamp.t_max = 100;
  o.bigamp.phase_t_max = 80;
  const SweepResult r = sweep(o);

  const std::string path = "test_sweep_out.csv";
  emit_csv(r, path);

  std::ifstream is(path);
  REQUIRE(is.good());
  std::string header;
  std::getline(is, header);
  CHECK(header.rfind("gamma,K,N,J,I,snr_db,", 0) == 0);

  std::ifstream ms(path + ".meta.json");
  REQUIRE(ms.good());
  nlohmann::json meta = nlohmann::json::parse(ms);
  CHECK(meta["master_seed"] == 7);
  CHECK(meta["trials"] == 2);
  CHECK(meta["points"].size() == 1);
  CHECK(meta["results"][0]["trial_seeds"].size() == 2);
  CHECK(meta["bigamp"]["strict_paper_variances"] == false);

  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());
}

TEST_CASE("csv floats round-trip exactly") {
  SweepOptions o;
  o.points = {{0.1, 17.5}};
  o.trials = 1;
  SweepResult r;
  r.options = o;
  SweepPointResult p;
  p.gamma = 0.1;
  p.K = 20;
  p.N = 30;
  p.J = 30;
  p.I = 200;
  p.snr_db = 17.5;
  p.trials = 1;
  p.ber = 1.0 / 3.0;
  p.ci95 = 0.0123456789012345678;
  p.id_error_rate = 2e-3;
  p.mean_iters = 1234.5;
  p.runtime_s = 9.87;
  r.points.push_back(p);

  const std::string csv = format_csv(r);
  std::istringstream is(csv);
  std::string header, line;
  std::getline(is, header);
  std::getline(is, line);
  std::istringstream fields(line);
  std::string tok;
  std::vector<std::string> cols;
  while (std::getline(fields, tok, ',')) cols.push_back(tok);
  REQUIRE(cols.size() == 12);
  CHECK(std::stod(cols[0]) == 0.1);
  CHECK(std::stod(cols[7]) == 1.0 / 3.0);
  CHECK(std::stod(cols[8]) == 0.0123456789012345678);
  CHECK(std::stod(cols[9]) == 2e-3);
}
