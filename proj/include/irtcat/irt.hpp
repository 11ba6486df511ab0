#pragma once

#include "irtcat/bank.hpp"
#include "irtcat/types.hpp"

namespace irtcat {

// P(correct | theta) = c + (1-c) / (1 + exp(-a (theta - b)))
double icc_3pl(const ItemParameters& p, double theta);

// logistic part only, s = 1 / (1 + exp(-a (theta - b)))
double icc_logistic(const ItemParameters& p, double theta);

// dP/dtheta = a (1-p)(p-c)/(1-c)
double icc_slope(const ItemParameters& p, double theta);

// log P(correct) and log P(incorrect) without underflow in the tails
void icc_log_probs(const ItemParameters& p, double theta, double* log_p, double* log_q);

double fisher_info(const ItemParameters& p, double theta, InfoForm form = InfoForm::logistic);

// analytic d/dtheta of fisher_info, same form selector
double info_derivative(const ItemParameters& p, double theta, InfoForm form = InfoForm::logistic);

// sum over record entries of y log p + (1-y) log(1-p); unknown ids throw
double log_likelihood(const TestRecord& rec, const ItemBank& bank, double theta);

// 1 / sqrt(sum of item information at theta); +inf when the sum is zero
double se_from_info(const TestRecord& rec, const ItemBank& bank, double theta,
                    InfoForm form = InfoForm::logistic);

// Posterior mean over the grid; se carries the posterior standard deviation
// (a spread diagnostic, not the information-based stopping SE).  An empty
// record returns the prior mean.  Throws DegenerateError when the posterior
// underflows everywhere.
AbilityEstimate eap_estimate(const TestRecord& rec, const ItemBank& bank,
                             const QuadratureGrid& grid = default_grid());

// Bias-corrected maximum likelihood: root of score(theta) + J/(2I) on
// [-6, 6] by safeguarded Newton.  One-sided objectives return the bracket
// edge with saturated = true.  se = 1 / sqrt(I(theta_hat)).
AbilityEstimate wle_estimate(const TestRecord& rec, const ItemBank& bank,
                             InfoForm form = InfoForm::logistic);

constexpr double kThetaLo = -6.0;
constexpr double kThetaHi = 6.0;

}  // namespace irtcat
