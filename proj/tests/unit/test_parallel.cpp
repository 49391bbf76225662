#include <doctest.h>

#include <omp.h>

#include <cmath>

#include "birkhoff/continued_fraction.hpp"
#include "birkhoff/deviation_stats.hpp"
#include "birkhoff/thermo.hpp"

using namespace birkhoff;

namespace {

struct ThreadScope {
  explicit ThreadScope(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
  int saved;
};

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) && std::isnan(b[i])) continue;
    if (a[i] != b[i]) return false;
  }
  return true;
}

void check_equal(const stats::EnsembleCounts& a, const stats::EnsembleCounts& b) {
  CHECK(a.plus == b.plus);
  CHECK(a.minus == b.minus);
  CHECK(a.cum_sq == b.cum_sq);
  CHECK(same_bits(a.lw_sq, b.lw_sq));
  CHECK(a.levy_plus == b.levy_plus);
  CHECK(a.levy_minus == b.levy_minus);
  CHECK(a.levy_cum_sq == b.levy_cum_sq);
  CHECK(a.terminated == b.terminated);
  REQUIRE(a.checkpoint_values.size() == b.checkpoint_values.size());
  for (std::size_t c = 0; c < a.checkpoint_values.size(); ++c)
    CHECK(same_bits(a.checkpoint_values[c], b.checkpoint_values[c]));
  CHECK(same_bits(a.autocov, b.autocov));
}

stats::ExperimentConfig gauss_run() {
  stats::ExperimentConfig c;
  c.eps_grid = {0.4, 0.3, 0.2};
  c.n_max = 300;
  c.samples = 1500;
  c.seed = 99;
  c.checkpoints = {100, 300};
  c.levy_channel = true;
  c.autocov_lags = 10;
  return c;
}

}  // namespace

TEST_CASE("ensemble kernel: serial reference and any thread count agree bit for bit") {
  const auto cfg = gauss_run();
  const auto serial = stats::run_ensemble_serial(cfg);
  for (int threads : {1, 2, 3, 4}) {
    ThreadScope scope(threads);
    check_equal(serial, stats::run_ensemble(cfg));
  }
}

TEST_CASE("ensemble kernel: i.i.d. sources are deterministic too") {
  stats::ExperimentConfig cfg;
  cfg.source = stats::SourceKind::IidBernoulli;
  cfg.eps_grid = {0.1, 0.05};
  cfg.n_max = 200;
  cfg.samples = 2000;
  cfg.checkpoints = {200};
  const auto serial = stats::run_ensemble_serial(cfg);
  ThreadScope scope(4);
  check_equal(serial, stats::run_ensemble(cfg));
  cfg.source = stats::SourceKind::IidGaussian;
  check_equal(stats::run_ensemble_serial(cfg), stats::run_ensemble(cfg));
}

TEST_CASE("collocation assembly and pressure table") {
  const thermo::PressureSolver solver;
  for (double beta : {0.8, 1.0, 1.7}) {
    ThreadScope scope(4);
    const Eigen::MatrixXd a = solver.assemble(beta, 40);
    const Eigen::MatrixXd b = solver.assemble_serial(beta, 40);
    CHECK((a.array() == b.array()).all());
  }
  const std::vector<double> betas = {0.75, 1.0, 1.25, 1.5};
  const thermo::PressureSolver s1;
  const thermo::PressureSolver s2;
  const auto serial = s1.table_serial(betas);
  ThreadScope scope(3);
  const auto par = s2.table(betas);
  CHECK(same_bits(serial.P, par.P));
  CHECK(same_bits(serial.P1, par.P1));
  CHECK(same_bits(serial.P2, par.P2));
}

TEST_CASE("continued-fraction batches") {
  const auto serial = cf::identity_batch_serial(5, 200, 30, 256);
  ThreadScope scope(4);
  const auto par = cf::identity_batch(5, 200, 30, 256);
  CHECK(serial.checks == par.checks);
  CHECK(serial.diophantine_failures == par.diophantine_failures);
  CHECK(serial.determinant_failures == par.determinant_failures);
  CHECK(same_bits(cf::levy_batch_serial(6, 100, 200, 1200), cf::levy_batch(6, 100, 200, 1200)));
}
