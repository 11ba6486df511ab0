#pragma once

#include <map>
#include <string>
#include <vector>

#include "irtcat/bank.hpp"
#include "irtcat/cat.hpp"
#include "json.hpp"

namespace irtcat {

struct SessionSummary {
  std::string respondent_id;
  double theta = 0.0;
  double se = std::numeric_limits<double>::infinity();
  int n_items = 0;
  SessionStatus status = SessionStatus::active;
  std::vector<std::string> items;  // administered, in administration order
  double accuracy = 0.0;           // fraction correct within the session
};

struct BatchSummary {
  std::vector<SessionSummary> sessions;
  // exposure denominator: every item that was eligible, administered or not
  std::vector<std::string> bank_items;
};

// Keeps only sessions that finished without a responder failure.
BatchSummary summarize_batch(const std::vector<SessionResult>& results, const ItemBank& bank);

// mean |estimate - reference| over identical key sets
double mae(const std::map<std::string, double>& estimates,
           const std::map<std::string, double>& references);

struct ExposureReport {
  std::map<std::string, double> per_item;  // h_i / |L|, zero rows included
  double average = 0.0;                    // sum h_i / (|I| |L|)
  double max = 0.0;
};

ExposureReport exposure_rates(const BatchSummary& batch);

// (|L| sum_i P(A_i)^2) / (Lbar (|L|-1)) - 1/(|L|-1)
double overlap_chen(const BatchSummary& batch);

// mean Jaccard similarity over unordered session pairs
double overlap_jaccard(const BatchSummary& batch);

// rank correlation, average ranks for ties
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// tau-a: (concordant - discordant) / (n(n-1)/2), ties count as neither
double kendall(const std::vector<double>& x, const std::vector<double>& y);

struct RankShiftReport {
  int threshold = 10;
  std::map<std::string, double> rank_delta;  // accuracy rank minus theta rank
  double shifted_fraction = 0.0;             // |delta| > threshold
  // (id_a, id_b, theta_a, theta_b) with equal accuracy but different theta
  std::vector<std::tuple<std::string, std::string, double, double>> equal_accuracy_pairs;
};

// Ranks descending (rank 1 = best) with average ranks for ties.
RankShiftReport rank_shift_report(const std::map<std::string, double>& acc_scores,
                                  const std::map<std::string, double>& thetas,
                                  int threshold = 10);

// Full metrics document; reference-dependent fields are omitted when
// references is null or pairs fewer than 2 respondents.
nlohmann::ordered_json metrics_report(const BatchSummary& batch,
                                      const std::map<std::string, double>* references,
                                      int rank_threshold = 10);

}  // namespace irtcat
