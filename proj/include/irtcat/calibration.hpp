#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "irtcat/bank.hpp"
#include "irtcat/response_matrix.hpp"
#include "irtcat/types.hpp"

namespace irtcat {

struct BetaPrior {
  double alpha = 2.0;
  double beta = 8.0;
};

struct ParameterBounds {
  double a_min = 0.05;
  double a_max = 5.0;
  double b_min = -6.0;
  double b_max = 6.0;
  double c_min = 0.0;  // realized as logit-space box, so c never reaches 0 exactly
  double c_max = 0.5;
};

struct CalibrationConfig {
  int partition_min_size = 100;
  QuadratureGrid grid;  // empty -> default 81-node grid
  int max_em_iterations = 500;
  double em_tolerance = 1e-3;
  // weak regularization that keeps guessing estimates out of degenerate
  // corners; disable by setting to std::nullopt
  std::optional<BetaPrior> c_prior = BetaPrior{};
  ParameterBounds bounds;
};

struct PartitionPlan {
  std::vector<std::vector<std::string>> groups;
  bool undersized = false;  // fewer items than partition_min_size
};

// K = floor(N / min_size) contiguous groups in the given order; the first
// K-1 groups hold exactly min_size items, the last absorbs the remainder.
PartitionPlan partition_items(const std::vector<std::string>& item_ids, int partition_min_size);

struct PartitionFit {
  std::map<std::string, ItemParameters> params;
  bool converged = false;
  int iterations = 0;
  // penalized marginal log-likelihood at the start of each iteration; this
  // is the quantity EM ascends when the c prior is on
  std::vector<double> objective_trace;
  // unpenalized marginal log-likelihood, same instants
  std::vector<double> loglik_trace;
  // constant columns get bound parameters instead of an EM fit, and items
  // whose discrimination finished stuck on the lower box edge
  std::set<std::string> degenerate_items;
};

PartitionFit calibrate_partition(const ResponseMatrix& subset, const CalibrationConfig& config);

struct LinkTransform {
  double A = 1.0;  // scale, positive
  double B = 0.0;  // shift
};

// A = sd(ref)/sd(k), B = mean(ref) - A mean(k); population SDs, vectors
// aligned over the same persons.
LinkTransform mean_sigma_link(const std::vector<double>& theta_ref,
                              const std::vector<double>& theta_k);

LinkTransform inverse(const LinkTransform& t);

// b -> A b + B, a -> a / A, c unchanged
ItemParameters apply_link(const ItemParameters& p, const LinkTransform& t);

struct CalibrationResult {
  ItemBank bank;
  std::map<std::string, AbilityEstimate> reference_thetas;  // model -> whole-bank WLE
  std::vector<PartitionFit> fits;                            // per partition
  std::vector<LinkTransform> links;                          // identity for partition 1
  bool undersized_partition = false;
  bool all_converged = true;
};

// Partition, calibrate, link everything to partition 1's scale, apply the
// post-calibration filter, then estimate whole-bank WLE references over the
// operational items.
CalibrationResult calibrate_bank(const ResponseMatrix& matrix, const CalibrationConfig& config);

}  // namespace irtcat
