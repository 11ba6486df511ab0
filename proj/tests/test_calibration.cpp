#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "harness.hpp"
#include "irtcat/calibration.hpp"
#include "irtcat/irt.hpp"
#include "oracles.hpp"

using namespace irtcat;

namespace {

std::vector<std::string> names(int n) {
  std::vector<std::string> out;
  for (int j = 0; j < n; ++j) out.push_back(harness::item_name(j));
  return out;
}

}  // namespace

TEST_CASE("contiguous partitions: the last group absorbs the remainder") {
  const PartitionPlan p250 = partition_items(names(250), 100);
  REQUIRE(p250.groups.size() == 2);
  CHECK(p250.groups[0].size() == 100);
  CHECK(p250.groups[1].size() == 150);
  CHECK_FALSE(p250.undersized);
  CHECK(p250.groups[0].front() == "it0000");
  CHECK(p250.groups[1].front() == "it0100");

  const PartitionPlan p100 = partition_items(names(100), 100);
  REQUIRE(p100.groups.size() == 1);
  CHECK(p100.groups[0].size() == 100);

  const PartitionPlan p99 = partition_items(names(99), 100);
  REQUIRE(p99.groups.size() == 1);
  CHECK(p99.groups[0].size() == 99);
  CHECK(p99.undersized);

  const PartitionPlan p450 = partition_items(names(450), 100);
  REQUIRE(p450.groups.size() == 4);
  CHECK(p450.groups[3].size() == 150);

  CHECK_THROWS_AS((void)partition_items(names(5), 0), ConfigError);
  CHECK_THROWS_AS((void)partition_items({}, 100), ConfigError);
}

TEST_CASE("partitions cover every item exactly once, in order") {
  const auto ids = names(337);
  const PartitionPlan plan = partition_items(ids, 100);
  std::vector<std::string> flat;
  for (const auto& g : plan.groups) flat.insert(flat.end(), g.begin(), g.end());
  CHECK(flat == ids);
}

TEST_CASE("mean-sigma link from person ability pairs") {
  const std::vector<double> ref{-1.0, 0.0, 1.0, 2.0};
  CHECK(mean_sigma_link(ref, ref).A == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mean_sigma_link(ref, ref).B == doctest::Approx(0.0).epsilon(1e-15));

  // cur = (ref - 1) / 2 recovers A = 2, B = 1
  std::vector<double> cur;
  for (double t : ref) cur.push_back((t - 1.0) / 2.0);
  const LinkTransform t = mean_sigma_link(ref, cur);
  CHECK(t.A == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t.B == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < ref.size(); ++i)
    CHECK(t.A * cur[i] + t.B == doctest::Approx(ref[i]).epsilon(1e-12));

  CHECK_THROWS_AS((void)mean_sigma_link(ref, {1.0, 1.0, 1.0, 1.0}), DegenerateError);
  CHECK_THROWS_AS((void)mean_sigma_link(ref, {1.0, 2.0}), PairingError);
  CHECK_THROWS_AS((void)mean_sigma_link({1.0}, {1.0}), PairingError);
}

TEST_CASE("link inversion and composition") {
  const LinkTransform t{2.0, 1.0};
  const LinkTransform inv = inverse(t);
  CounterRng rng(1501);
  for (int k = 0; k < 20; ++k) {
    ItemParameters p{0.3 + 2.0 * rng.next_double(), -2.0 + 4.0 * rng.next_double(),
                     0.4 * rng.next_double()};
    const ItemParameters round = apply_link(apply_link(p, t), inv);
    CHECK(std::fabs(round.a - p.a) <= 1e-10);
    CHECK(std::fabs(round.b - p.b) <= 1e-10);
    CHECK(round.c == p.c);
  }
  CHECK_THROWS_AS((void)inverse(LinkTransform{0.0, 1.0}), ConfigError);
}

TEST_CASE("applying a link rescales difficulty and discrimination") {
  const ItemParameters p{1.0, 0.5, 0.2};
  const ItemParameters q = apply_link(p, {2.0, 1.0});
  CHECK(q.a == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q.b == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(q.c == doctest::Approx(0.2).epsilon(1e-15));

  const ItemParameters same = apply_link(p, {1.0, 0.0});
  CHECK(same.a == p.a);
  CHECK(same.b == p.b);
}

TEST_CASE("linked items give the same response probabilities on the new scale") {
  const LinkTransform t{1.7, -0.6};
  CounterRng rng(1601);
  for (int k = 0; k < 20; ++k) {
    ItemParameters p{0.3 + 2.0 * rng.next_double(), -2.0 + 4.0 * rng.next_double(),
                     0.4 * rng.next_double()};
    const ItemParameters q = apply_link(p, t);
    for (double th = -3.0; th <= 3.0; th += 0.75)
      CHECK(icc_3pl(q, t.A * th + t.B) == doctest::Approx(icc_3pl(p, th)).epsilon(1e-12));
  }
}

TEST_CASE("one-item estimation pins the marginal proportion correct") {
  ItemBank truth;
  truth.add({"only", {1.5, 0.5, 0.2}, 1, false, ""});
  const ResponseMatrix m =
      harness::simulate_matrix(truth, harness::sample_thetas(5000, 1701), 1702);
  CalibrationConfig cfg;
  const PartitionFit fit = calibrate_partition(m, cfg);
  CHECK(fit.converged);

  // a single dichotomous margin identifies only the prior-weighted success
  // probability; a, b, c individually keep wide slack
  double empirical = 0.0;
  for (int i = 0; i < m.n_models(); ++i) empirical += m.at(i, 0);
  empirical /= m.n_models();

  const QuadratureGrid& grid = default_grid();
  double implied = 0.0;
  for (std::size_t q = 0; q < grid.nodes.size(); ++q)
    implied += grid.weights[q] * icc_3pl(fit.params.at("only"), grid.nodes[q]);

  CHECK(std::fabs(implied - empirical) <= 0.02);
  CHECK(std::fabs(fit.params.at("only").b - 0.5) <= 0.5);
}

TEST_CASE("identical columns calibrate to identical parameters") {
  ItemBank truth = harness::sample_bank(20, 1801);
  ResponseMatrix base =
      harness::simulate_matrix(truth, harness::sample_thetas(400, 1802), 1803);
  std::vector<std::string> items = base.item_ids();
  items.push_back("clone");
  ResponseMatrix m(base.model_ids(), items);
  for (int i = 0; i < base.n_models(); ++i) {
    for (int j = 0; j < base.n_items(); ++j) m.set(i, j, base.at(i, j));
    m.set(i, base.n_items(), base.at(i, 0));  // copy of column 0
  }
  const PartitionFit fit = calibrate_partition(m, CalibrationConfig{});
  const ItemParameters& orig = fit.params.at(base.item_ids()[0]);
  const ItemParameters& dup = fit.params.at("clone");
  CHECK(std::fabs(orig.a - dup.a) <= 1e-10);
  CHECK(std::fabs(orig.b - dup.b) <= 1e-10);
  CHECK(std::fabs(orig.c - dup.c) <= 1e-10);
}

TEST_CASE("the fitting objective never decreases across iterations") {
  ItemBank truth = harness::sample_bank(15, 1901);
  const ResponseMatrix m =
      harness::simulate_matrix(truth, harness::sample_thetas(300, 1902), 1903);

  CalibrationConfig with_prior;  // default: guessing prior on
  const PartitionFit f1 = calibrate_partition(m, with_prior);
  REQUIRE(f1.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < f1.objective_trace.size(); ++i)
    CHECK(f1.objective_trace[i] >= f1.objective_trace[i - 1] - 1e-9);

  CalibrationConfig plain;
  plain.c_prior = std::nullopt;  // objective reduces to the raw marginal
  const PartitionFit f2 = calibrate_partition(m, plain);
  REQUIRE(f2.loglik_trace.size() >= 2);
  for (std::size_t i = 1; i < f2.loglik_trace.size(); ++i)
    CHECK(f2.loglik_trace[i] >= f2.loglik_trace[i - 1] - 1e-9);
  for (std::size_t i = 0; i < f2.loglik_trace.size(); ++i)
    CHECK(f2.objective_trace[i] == f2.loglik_trace[i]);
}

TEST_CASE("constant columns are parked on the difficulty bound and flagged") {
  ItemBank truth = harness::sample_bank(10, 2001);
  ResponseMatrix base =
      harness::simulate_matrix(truth, harness::sample_thetas(200, 2002), 2003);
  std::vector<std::string> items = base.item_ids();
  items.push_back("free");
  items.push_back("brick");
  ResponseMatrix m(base.model_ids(), items);
  for (int i = 0; i < base.n_models(); ++i) {
    for (int j = 0; j < base.n_items(); ++j) m.set(i, j, base.at(i, j));
    m.set(i, base.n_items(), 1);      // everyone correct
    m.set(i, base.n_items() + 1, 0);  // everyone incorrect
  }
  CalibrationConfig cfg;
  const PartitionFit fit = calibrate_partition(m, cfg);
  CHECK(fit.degenerate_items.count("free") == 1);
  CHECK(fit.degenerate_items.count("brick") == 1);
  CHECK(fit.params.at("free").b == cfg.bounds.b_min);
  CHECK(fit.params.at("brick").b == cfg.bounds.b_max);
  CHECK(fit.params.at("free").a == cfg.bounds.a_min);
}

TEST_CASE("an iteration cap returns the best iterate unconverged") {
  ItemBank truth = harness::sample_bank(12, 2101);
  const ResponseMatrix m =
      harness::simulate_matrix(truth, harness::sample_thetas(250, 2102), 2103);
  CalibrationConfig cfg;
  cfg.max_em_iterations = 2;
  const PartitionFit fit = calibrate_partition(m, cfg);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations <= 2);
  CHECK(fit.params.size() == 12);
}

TEST_CASE("bank calibration partitions, links, and filters end to end") {
  harness::BankRanges r;
  r.c_hi = 0.25;
  ItemBank truth = harness::sample_bank(240, 2201, r);
  const std::vector<double> thetas = harness::sample_thetas(800, 2202);
  const ResponseMatrix m = harness::simulate_matrix(truth, thetas, 2203);

  CalibrationConfig cfg;
  cfg.partition_min_size = 120;
  const CalibrationResult res = calibrate_bank(m, cfg);

  REQUIRE(res.links.size() == 2);
  CHECK(res.links[0].A == 1.0);
  CHECK(res.links[0].B == 0.0);
  CHECK(res.bank.size() == 240);
  CHECK(res.bank.item("it0000").partition == 1);
  CHECK(res.bank.item("it0239").partition == 2);
  CHECK_FALSE(res.undersized_partition);

  // linked difficulties track the generating values
  std::vector<double> b_true, b_hat;
  for (int j = 0; j < res.bank.size(); ++j) {
    if (res.bank.item(j).filtered) continue;
    b_true.push_back(truth.item(res.bank.item(j).id).params.b);
    b_hat.push_back(res.bank.item(j).params.b);
  }
  REQUIRE(b_hat.size() >= 200);
  CHECK(oracle::pearson(b_true, b_hat) >= 0.9);

  // the released scale is the reference-ability moments
  std::vector<double> refs;
  for (const auto& [id, est] : res.reference_thetas) refs.push_back(est.theta);
  CHECK(res.bank.scale_mean() == doctest::Approx(oracle::mean(refs)).epsilon(1e-9));
  CHECK(res.bank.scale_sd() == doctest::Approx(oracle::population_sd(refs)).epsilon(1e-9));

  CHECK_THROWS_AS((void)calibrate_bank(m, CalibrationConfig{50, {}, 500, 1e-3,
                                                            BetaPrior{}, ParameterBounds{}}),
                  ConfigError);
}

TEST_CASE("linking is the affine map that reconciles partition abilities") {
  // an ability re-estimated from linked partition-2 items must equal the
  // provisional-scale estimate pushed through the partition's transform
  harness::BankRanges r;
  r.c_hi = 0.2;
  ItemBank truth = harness::sample_bank(200, 2301, r);
  const std::vector<double> thetas = harness::sample_thetas(300, 2302);
  const ResponseMatrix m = harness::simulate_matrix(truth, thetas, 2303);

  CalibrationConfig cfg;
  const CalibrationResult res = calibrate_bank(m, cfg);
  REQUIRE(res.links.size() == 2);
  const LinkTransform t = res.links[1];

  ItemBank raw, linked;
  for (int j = 0; j < res.bank.size(); ++j) {
    const BankItem& it = res.bank.item(j);
    if (it.partition != 2 || it.filtered) continue;
    linked.add({it.id, it.params, 1, false, ""});
    raw.add({it.id, res.fits[1].params.at(it.id), 1, false, ""});
  }
  REQUIRE(linked.size() >= 80);

  double worst = 0.0;
  int used = 0;
  for (int row = 0; row < 40; ++row) {
    TestRecord rec;
    int ones = 0;
    for (int j = 0; j < linked.size(); ++j) {
      const int y = m.at(row, m.item_index(linked.item(j).id));
      ones += y;
      rec.entries.push_back({linked.item(j).id, y});
    }
    if (ones == 0 || ones == linked.size()) continue;  // edge solutions do not map affinely
    const auto on_linked = wle_estimate(rec, linked);
    const auto on_raw = wle_estimate(rec, raw);
    if (on_linked.saturated || on_raw.saturated) continue;
    worst = std::max(worst, std::fabs(on_linked.theta - (t.A * on_raw.theta + t.B)));
    ++used;
  }
  REQUIRE(used >= 30);
  CHECK(worst <= 1e-5);
}

TEST_CASE("items answered against the trend end up filtered") {
  harness::BankRanges r;
  r.c_hi = 0.0;
  ItemBank truth = harness::sample_bank(110, 2401, r);
  const std::vector<double> thetas = harness::sample_thetas(400, 2402);
  ResponseMatrix m = harness::simulate_matrix(truth, thetas, 2403);
  const int anti = m.item_index("it0042");
  for (int i = 0; i < m.n_models(); ++i) m.set(i, anti, 1 - m.at(i, anti));

  const CalibrationResult res = calibrate_bank(m, CalibrationConfig{});
  CHECK(res.bank.item("it0042").filtered);
  CHECK_FALSE(res.bank.item("it0042").notes.empty());
}

TEST_CASE("an under-minimum matrix calibrates as one undersized partition") {
  ItemBank truth = harness::sample_bank(99, 2501);
  const ResponseMatrix m =
      harness::simulate_matrix(truth, harness::sample_thetas(260, 2502), 2503);
  const CalibrationResult res = calibrate_bank(m, CalibrationConfig{});
  CHECK(res.undersized_partition);
  CHECK(res.links.size() == 1);
  CHECK(res.bank.size() == 99);
}

TEST_CASE("bank calibration is deterministic across runs") {
  ItemBank truth = harness::sample_bank(120, 2601);
  const ResponseMatrix m =
      harness::simulate_matrix(truth, harness::sample_thetas(200, 2602), 2603);
  const CalibrationResult a = calibrate_bank(m, CalibrationConfig{});
  const CalibrationResult b = calibrate_bank(m, CalibrationConfig{});
  CHECK(bank_to_json(a.bank) == bank_to_json(b.bank));
}
