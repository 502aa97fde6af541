#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "skno/diagnostics.hpp"
#include "skno/error.hpp"
#include "skno/generators.hpp"
#include "skno/linalg.hpp"

using namespace skno;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  return Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(n, n, seed)).householderQ();
}

ArchConfig small_arch() {
  ArchConfig a;
  a.d = 1;
  a.modes = 4;
  a.n_p = 8;
  a.n_layers = 3;
  a.with_local_propagator = false;
  return a;
}

}  // namespace

TEST_CASE("entanglement entropy") {
  Eigen::VectorXd x = random_matrix(12, 1, 1).col(0), y = random_matrix(5, 1, 2).col(0);
  CHECK(std::abs(entanglement_entropy(x * y.transpose())) < 1e-12);
  for (int n : {1, 3, 7}) CHECK(entanglement_entropy(2.5 * Eigen::MatrixXd::Identity(n, n)) == doctest::Approx(std::log(n)));

  const Eigen::MatrixXd v = random_matrix(16, 8, 3);
  const auto lambda = oracle::jacobi_eigenvalues(v.transpose() * v);
  double tr = 0, ref = 0;
  for (double l : lambda) tr += l;
  for (double l : lambda) ref -= l / tr * std::log(l / tr);
  CHECK(std::abs(entanglement_entropy(v) - ref) < 1e-10);
  CHECK(std::abs(entanglement_entropy(v.transpose()) - ref) < 1e-10);

  const Eigen::MatrixXd rotated = random_orthogonal(16, 4) * v * random_orthogonal(8, 5).transpose();
  CHECK(std::abs(entanglement_entropy(rotated) - ref) < 1e-10);
  CHECK(std::abs(entanglement_entropy(-3.7e-5 * v) - entanglement_entropy(v)) < 1e-12);
  CHECK_THROWS_AS(entanglement_entropy(Eigen::MatrixXd::Zero(4, 3)), UsageError);
}

TEST_CASE("layer trace entropies") {
  ArchConfig arch = small_arch();
  SknoModel m(arch, 6);
  std::vector<double> mean{0.4}, stdv{1.7};
  m.set_normalization(mean, stdv, 2.0);
  Rng rng(7);
  const Field a = eval_band_limited(draw_band_limited(rng), Grid(64));
  const auto rows = trace_entropies(m, a);
  std::vector<std::string> labels;
  for (const auto& r : rows) labels.push_back(r.stage);
  CHECK(labels == std::vector<std::string>{"0", "01", "1", "12", "2", "23", "3"});
  CHECK(rows[0].entropy < 1e-10);
  CHECK(rows.back().entropy > 1e-6);
  CHECK(entropy_csv(rows).rfind("stage,entropy\n0,", 0) == 0);

  SknoModel zero(arch, 8);
  for (auto& p : zero.params().all())
    if (p.learnable) std::fill(p.data.begin(), p.data.end(), 0.0);
  const auto z = trace_entropies(zero, a);
  for (const auto& r : z) CHECK(r.skipped);
  CHECK(entropy_csv(z).find("0,skipped") != std::string::npos);
}

TEST_CASE("energy capture") {
  const Eigen::MatrixXd v = random_matrix(64, 16, 9);
  const Eigen::VectorXd chi = random_matrix(16, 1, 10).col(0);
  double prev = 0.0;
  for (int r = 1; r <= 16; ++r) {
    const auto e = energy_capture(v, chi, r);
    CHECK(e.energy >= prev - 1e-15);
    prev = e.energy;
    if (e.energy < 1.0 - 1e-12) {
      const double identity = e.u_norm * std::sqrt(1.0 - e.energy);
      CHECK(std::abs(e.truncation_error - identity) <= 1e-10 * identity);
    }
  }
  const auto full = energy_capture(v, chi, 16);
  CHECK(full.energy == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(full.truncation_error < 1e-12 * full.u_norm);

  const Eigen::MatrixXd rank1 = random_matrix(20, 1, 11) * random_matrix(1, 6, 12);
  CHECK(energy_capture(rank1, random_matrix(6, 1, 13).col(0), 1).energy == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(energy_capture(v, chi, 0), UsageError);
  CHECK_THROWS_AS(energy_capture(v, chi, 17), UsageError);
  CHECK_THROWS_AS(energy_capture(v, Eigen::VectorXd::Zero(16), 3), UsageError);
}

TEST_CASE("dictionary report") {
  ArchConfig arch = small_arch();
  SknoModel m(arch, 14);
  auto& chi = m.params().at("recover.chi").data;
  std::fill(chi.begin(), chi.end(), 0.0);
  chi[5] = -2.0;
  const Dataset test = gen_heat_dataset(6, Grid(32), OracleConfig{}, 15);
  const auto rows = dictionary_report(m, test);
  CHECK(rows.size() == 8);
  CHECK(rows[0].aux_index == 5);
  CHECK(rows[0].abs_weight == 2.0);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].abs_weight == 0.0);
  CHECK(dictionary_csv(rows).rfind("aux_index,abs_weight,mean_energy,below_threshold\n5,", 0) == 0);

  Dataset reversed = test;
  for (int i = 0; i < test.count; ++i) reversed.set_sample(i, test.input(test.count - 1 - i), test.target(test.count - 1 - i));
  const auto rrows = dictionary_report(m, reversed);
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(rrows[i].mean_energy == doctest::Approx(rows[i].mean_energy).epsilon(1e-13));

  const auto all = dictionary_report(m, test, 1e300);
  for (const auto& r : all) CHECK(r.below_threshold);
  ArchConfig mlp = arch;
  mlp.recover_kind = RecoverKind::mlp;
  CHECK_THROWS_AS(dictionary_report(SknoModel(mlp, 1), test), UsageError);
}

TEST_CASE("super-resolution sweep") {
  SknoModel m(small_arch(), 16);
  auto gen = [](int n) { return gen_heat_dataset(4, Grid(n), OracleConfig{}, 17); };
  const auto one = superres_sweep(m, gen, {64});
  CHECK(one.variance == 0.0);
  CHECK(one.rows.size() == 1);
  const auto rep = superres_sweep(m, gen, {4, 32, 64, 128});
  CHECK(rep.rows[0].skipped);
  CHECK(rep.warnings.size() == 1);
  CHECK(rep.rows.size() == 4);
  CHECK(rep.max_min_ratio < 1.01);
  CHECK(rep.csv().rfind("resolution,rel_l2\n4,skipped\n32,", 0) == 0);
}
