#include <cmath>
#include <vector>

#include "doctest.h"
#include "harness.hpp"
#include "irtcat/irt.hpp"
#include "oracles.hpp"

using namespace irtcat;

TEST_CASE("icc evaluates the three-parameter logistic") {
  CHECK(icc_3pl({1.0, 0.0, 0.0}, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  // c + (1-c)/2 at theta == b
  CHECK(icc_3pl({2.0, 1.0, 0.25}, 1.0) == doctest::Approx(0.625).epsilon(1e-12));
  // far left tail collapses to the lower asymptote
  CHECK(icc_3pl({2.0, 0.0, 0.2}, -6.0) == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("icc is increasing in theta and bounded by [c, 1)") {
  CounterRng rng(11);
  for (int t = 0; t < 50; ++t) {
    ItemParameters p{0.2 + 3.0 * rng.next_double(), -3.0 + 6.0 * rng.next_double(),
                     0.4 * rng.next_double()};
    double prev = -1.0;
    for (double th = -8.0; th <= 8.0; th += 0.25) {
      const double v = icc_3pl(p, th);
      CHECK(v >= p.c);
      CHECK(v < 1.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("log probabilities match direct logs at moderate arguments") {
  const ItemParameters p{1.3, -0.4, 0.2};
  for (double th = -3.0; th <= 3.0; th += 0.5) {
    double lp = 0.0, lq = 0.0;
    icc_log_probs(p, th, &lp, &lq);
    const double prob = icc_3pl(p, th);
    CHECK(lp == doctest::Approx(std::log(prob)).epsilon(1e-12));
    CHECK(lq == doctest::Approx(std::log1p(-prob)).epsilon(1e-12));
  }
}

TEST_CASE("log probabilities stay finite where direct logs underflow") {
  const ItemParameters p{3.0, 0.0, 0.0};
  double lp = 0.0, lq = 0.0;
  icc_log_probs(p, 30.0, &lp, &lq);  // z = 90, 1-p underflows in double
  CHECK(std::isfinite(lq));
  CHECK(lq == doctest::Approx(-90.0).epsilon(1e-9));
  CHECK(lp == doctest::Approx(0.0).epsilon(1e-12));
  icc_log_probs(p, -30.0, &lp, &lq);
  CHECK(std::isfinite(lp));
  CHECK(lp == doctest::Approx(-90.0).epsilon(1e-9));
}

TEST_CASE("item information at known points") {
  CHECK(fisher_info({1.0, 0.0, 0.0}, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  // p = 0.625 -> a^2 p (1-p) = 4 * 0.234375
  CHECK(fisher_info({2.0, 1.0, 0.25}, 1.0) == doctest::Approx(0.9375).epsilon(1e-12));
  CHECK(fisher_info({0.0, 0.0, 0.0}, 1.7) == 0.0);
}

TEST_CASE("both information forms agree with the reference formulas") {
  CounterRng rng(23);
  for (int t = 0; t < 200; ++t) {
    const ItemParameters p{0.3 + 2.5 * rng.next_double(), -2.5 + 5.0 * rng.next_double(),
                           0.35 * rng.next_double()};
    const double th = -4.0 + 8.0 * rng.next_double();
    for (InfoForm f : {InfoForm::logistic, InfoForm::exact3pl}) {
      CHECK(fisher_info(p, th, f) ==
            doctest::Approx(oracle::fisher(p.a, p.b, p.c, th, f)).epsilon(1e-12));
    }
    // guessing correction never adds information
    CHECK(fisher_info(p, th, InfoForm::exact3pl) <=
          fisher_info(p, th, InfoForm::logistic) + 1e-15);
  }
}

TEST_CASE("the two forms coincide when guessing is zero") {
  for (double th = -3.0; th <= 3.0; th += 0.37) {
    const ItemParameters p{1.7, 0.3, 0.0};
    CHECK(fisher_info(p, th, InfoForm::exact3pl) ==
          doctest::Approx(fisher_info(p, th, InfoForm::logistic)).epsilon(1e-14));
  }
}

TEST_CASE("information derivative matches central differences") {
  CounterRng rng(31);
  for (int t = 0; t < 100; ++t) {
    const ItemParameters p{0.4 + 2.2 * rng.next_double(), -2.0 + 4.0 * rng.next_double(),
                           0.3 * rng.next_double()};
    const double th = -3.5 + 7.0 * rng.next_double();
    for (InfoForm f : {InfoForm::logistic, InfoForm::exact3pl}) {
      const double numeric = oracle::central_diff(
          [&](double x) { return fisher_info(p, x, f); }, th, 1e-5);
      CHECK(std::fabs(info_derivative(p, th, f) - numeric) <= 1e-6);
    }
  }
}

TEST_CASE("information derivative vanishes at the symmetric peak") {
  CHECK(info_derivative({1.0, 0.0, 0.0}, 0.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(info_derivative({0.0, 1.0, 0.0}, 0.5) == 0.0);
}

TEST_CASE("record log-likelihood") {
  ItemBank bank = harness::sample_bank(10, 41);
  TestRecord rec;
  CHECK(log_likelihood(rec, bank, 0.7) == 0.0);

  ItemBank unit;
  unit.add({"only", {1.0, 0.0, 0.0}, 1, false, ""});
  rec.entries.push_back({"only", 1});
  CHECK(log_likelihood(rec, unit, 0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

  TestRecord full = harness::random_record(bank, 0.3, 10, 43);
  CHECK(log_likelihood(full, bank, -0.8) ==
        doctest::Approx(oracle::log_likelihood(harness::scored(full, bank), -0.8))
            .epsilon(1e-12));

  TestRecord bad;
  bad.entries.push_back({"nope", 1});
  CHECK_THROWS_AS((void)log_likelihood(bad, bank, 0.0), LookupError);
}

TEST_CASE("standard error from summed information") {
  ItemBank unit;
  unit.add({"only", {1.0, 0.0, 0.0}, 1, false, ""});
  TestRecord one;
  one.entries.push_back({"only", 1});
  CHECK(se_from_info(one, unit, 0.0) == doctest::Approx(2.0).epsilon(1e-12));

  ItemBank four;
  TestRecord rec4;
  for (int j = 0; j < 4; ++j) {
    const std::string id = "q" + std::to_string(j);
    four.add({id, {1.0, 0.0, 0.0}, 1, false, ""});
    rec4.entries.push_back({id, j % 2});
  }
  CHECK(se_from_info(rec4, four, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

  TestRecord empty;
  CHECK(std::isinf(se_from_info(empty, four, 0.0)));
}

TEST_CASE("posterior mean on an empty record is the prior mean") {
  ItemBank bank = harness::sample_bank(5, 47);
  const AbilityEstimate est = eap_estimate(TestRecord{}, bank);
  CHECK(std::fabs(est.theta) <= 1e-12);
  CHECK(est.se == doctest::Approx(1.0).epsilon(1e-3));  // prior sd on the truncated grid
  CHECK(est.items_used == 0);
  CHECK(est.estimator == Estimator::eap);
}

TEST_CASE("posterior mean is antisymmetric for one symmetric item") {
  ItemBank bank;
  bank.add({"only", {1.4, 0.0, 0.0}, 1, false, ""});
  TestRecord right, wrong;
  right.entries.push_back({"only", 1});
  wrong.entries.push_back({"only", 0});
  const double up = eap_estimate(right, bank).theta;
  const double down = eap_estimate(wrong, bank).theta;
  CHECK(up > 0.0);
  CHECK(up == doctest::Approx(-down).epsilon(1e-12));
}

TEST_CASE("posterior mean matches a dense-grid reference") {
  for (std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    ItemBank bank = harness::sample_bank(30, seed);
    TestRecord rec = harness::random_record(bank, 0.5, 30, seed + 7);
    const double fine = oracle::eap_fine_grid(harness::scored(rec, bank));
    CHECK(std::fabs(eap_estimate(rec, bank).theta - fine) <= 1e-6);
  }
}

TEST_CASE("posterior mean shrinks toward the prior on average") {
  // pointwise |EAP| <= |ML| is not a theorem for guessing-floor items (the
  // skewed likelihood can push the posterior mean past a near-zero ML), but
  // shrinkage must show up in aggregate over replications
  double sum_eap = 0.0, sum_ml = 0.0;
  for (std::uint64_t seed = 210; seed < 230; ++seed) {
    ItemBank bank = harness::sample_bank(12, seed);
    TestRecord rec = harness::random_record(bank, 1.5, 12, seed * 3 + 1);
    const auto items = harness::scored(rec, bank);
    sum_eap += std::fabs(eap_estimate(rec, bank).theta);
    sum_ml += std::fabs(oracle::ml_grid(items));
  }
  CHECK(sum_eap < sum_ml);
}

TEST_CASE("bias-corrected estimate is finite on perfect and null records") {
  ItemBank bank = harness::sample_bank(30, 57);
  TestRecord all1, all0;
  for (int j = 0; j < 30; ++j) {
    all1.entries.push_back({bank.item(j).id, 1});
    all0.entries.push_back({bank.item(j).id, 0});
  }
  for (const TestRecord* rec : {&all1, &all0}) {
    const AbilityEstimate est = wle_estimate(*rec, bank);
    CHECK(std::isfinite(est.theta));
    CHECK(std::isfinite(est.se));
    CHECK(est.estimator == Estimator::wle);
  }
  CHECK(wle_estimate(all1, bank).theta > wle_estimate(all0, bank).theta);
}

TEST_CASE("bias-corrected estimate is zero on a mirror-symmetric record") {
  ItemBank bank;
  TestRecord rec;
  int j = 0;
  for (double d : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    const std::string lo = "lo" + std::to_string(j), hi = "hi" + std::to_string(j);
    bank.add({lo, {1.2, -d, 0.0}, 1, false, ""});
    bank.add({hi, {1.2, d, 0.0}, 1, false, ""});
    rec.entries.push_back({lo, 1});
    rec.entries.push_back({hi, 0});
    ++j;
  }
  CHECK(std::fabs(wle_estimate(rec, bank).theta) <= 1e-7);
}

TEST_CASE("bias-corrected estimate matches a dense grid search") {
  for (std::uint64_t seed : {301ULL, 302ULL, 303ULL, 304ULL}) {
    ItemBank bank = harness::sample_bank(25, seed);
    TestRecord rec = harness::random_record(bank, -0.4, 25, seed + 11);
    const auto items = harness::scored(rec, bank);
    for (InfoForm f : {InfoForm::logistic, InfoForm::exact3pl}) {
      const double grid = oracle::wle_grid(items, f);
      CHECK(std::fabs(wle_estimate(rec, bank, f).theta - grid) <= 1e-4);
    }
  }
}

TEST_CASE("bias-corrected estimate rejects empty records") {
  ItemBank bank = harness::sample_bank(4, 61);
  CHECK_THROWS_AS((void)wle_estimate(TestRecord{}, bank), ConfigError);
}

TEST_CASE("longer records estimate ability more accurately") {
  ItemBank bank = harness::sample_bank(300, 67);
  const double truth = 0.7;
  double err_short = 0.0, err_long = 0.0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    TestRecord rec = harness::random_record(bank, truth, 300, 900 + r);
    TestRecord head;
    head.entries.assign(rec.entries.begin(), rec.entries.begin() + 30);
    err_short += std::fabs(wle_estimate(head, bank).theta - truth);
    err_long += std::fabs(wle_estimate(rec, bank).theta - truth);
  }
  CHECK(err_long / reps < err_short / reps);
}
