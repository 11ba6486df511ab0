#include "irtcat/irt.hpp"

#include <algorithm>
#include <cmath>

namespace irtcat {

QuadratureGrid make_normal_grid(int n_nodes, double lo, double hi) {
  if (n_nodes < 2 || !(hi > lo))
    throw ConfigError("make_normal_grid: need at least 2 nodes and hi > lo");
  QuadratureGrid g;
  g.nodes.resize(n_nodes);
  g.weights.resize(n_nodes);
  const double step = (hi - lo) / (n_nodes - 1);
  double total = 0.0;
  for (int q = 0; q < n_nodes; ++q) {
    const double x = lo + step * q;
    g.nodes[q] = x;
    g.weights[q] = std::exp(-0.5 * x * x);
    total += g.weights[q];
  }
  for (double& w : g.weights) w /= total;
  return g;
}

const QuadratureGrid& default_grid() {
  static const QuadratureGrid g = make_normal_grid();
  return g;
}

double icc_logistic(const ItemParameters& p, double theta) {
  const double z = p.a * (theta - p.b);
  // branch keeps exp() off the overflowing side
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double icc_3pl(const ItemParameters& p, double theta) {
  return p.c + (1.0 - p.c) * icc_logistic(p, theta);
}

double icc_slope(const ItemParameters& p, double theta) {
  const double s = icc_logistic(p, theta);
  return p.a * (1.0 - p.c) * s * (1.0 - s);
}

namespace {

inline double softplus(double z) {
  // log(1 + exp(z)) without overflow
  if (z > 35.0) return z;
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

}  // namespace

void icc_log_probs(const ItemParameters& p, double theta, double* log_p, double* log_q) {
  const double z = p.a * (theta - p.b);
  // log(1-p) = log(1-c) - log(1+exp(z))
  *log_q = std::log1p(-p.c) - softplus(z);
  if (p.c == 0.0) {
    *log_p = -softplus(-z);
  } else {
    *log_p = std::log(icc_3pl(p, theta));
  }
}

double fisher_info(const ItemParameters& p, double theta, InfoForm form) {
  if (p.a == 0.0) return 0.0;
  const double s = icc_logistic(p, theta);
  const double pr = p.c + (1.0 - p.c) * s;
  if (form == InfoForm::logistic) return p.a * p.a * pr * (1.0 - pr);
  if (pr <= 0.0) return 0.0;
  return p.a * p.a * s * s * (1.0 - p.c) * (1.0 - s) / pr;
}

double info_derivative(const ItemParameters& p, double theta, InfoForm form) {
  if (p.a == 0.0) return 0.0;
  const double s = icc_logistic(p, theta);
  const double pr = p.c + (1.0 - p.c) * s;
  const double slope = p.a * (1.0 - p.c) * s * (1.0 - s);
  if (form == InfoForm::logistic) return p.a * p.a * slope * (1.0 - 2.0 * pr);
  if (pr <= 0.0) return 0.0;
  const double bracket = 2.0 * (1.0 - s) * pr - s;
  return p.a * p.a * p.a * (1.0 - p.c) * s * s * (1.0 - s) * bracket / (pr * pr);
}

double log_likelihood(const TestRecord& rec, const ItemBank& bank, double theta) {
  double ll = 0.0;
  for (const auto& e : rec.entries) {
    const BankItem& it = bank.item(bank.index_of(e.item_id));
    double lp, lq;
    icc_log_probs(it.params, theta, &lp, &lq);
    ll += e.response ? lp : lq;
  }
  return ll;
}

double se_from_info(const TestRecord& rec, const ItemBank& bank, double theta, InfoForm form) {
  double total = 0.0;
  for (const auto& e : rec.entries)
    total += fisher_info(bank.item(bank.index_of(e.item_id)).params, theta, form);
  if (total <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(total);
}

AbilityEstimate eap_estimate(const TestRecord& rec, const ItemBank& bank,
                             const QuadratureGrid& grid) {
  const int nq = static_cast<int>(grid.nodes.size());
  std::vector<double> logpost(nq);
  for (int q = 0; q < nq; ++q)
    logpost[q] = std::log(grid.weights[q]);
  for (const auto& e : rec.entries) {
    const ItemParameters& p = bank.item(bank.index_of(e.item_id)).params;
    for (int q = 0; q < nq; ++q) {
      double lp, lq;
      icc_log_probs(p, grid.nodes[q], &lp, &lq);
      logpost[q] += e.response ? lp : lq;
    }
  }

  const double m = *std::max_element(logpost.begin(), logpost.end());
  if (!std::isfinite(m))
    throw DegenerateError("eap_estimate: posterior mass underflowed at every node");
  double norm = 0.0, mean = 0.0;
  for (int q = 0; q < nq; ++q) {
    const double g = std::exp(logpost[q] - m);
    norm += g;
    mean += grid.nodes[q] * g;
  }
  mean /= norm;
  double var = 0.0;
  for (int q = 0; q < nq; ++q) {
    const double d = grid.nodes[q] - mean;
    var += d * d * std::exp(logpost[q] - m);
  }
  var /= norm;

  AbilityEstimate est;
  est.theta = mean;
  est.se = std::sqrt(std::max(var, 0.0));
  est.estimator = Estimator::eap;
  est.items_used = static_cast<int>(rec.size());
  return est;
}

namespace {

struct WleParts {
  double score;  // d logL / d theta
  double info;   // sum of item information
  double dinfo;  // d info / d theta
  double loglik;
};

WleParts wle_parts(const std::vector<const ItemParameters*>& items,
                   const std::vector<int>& responses, double theta, InfoForm form) {
  WleParts out{0.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < items.size(); ++k) {
    const ItemParameters& p = *items[k];
    const double pr = icc_3pl(p, theta);
    const double sl = icc_slope(p, theta);
    const double denom = pr * (1.0 - pr);
    if (denom > 0.0)
      out.score += sl * (responses[k] - pr) / denom;
    out.info += fisher_info(p, theta, form);
    out.dinfo += info_derivative(p, theta, form);
    double lp, lq;
    icc_log_probs(p, theta, &lp, &lq);
    out.loglik += responses[k] ? lp : lq;
  }
  return out;
}

}  // namespace

AbilityEstimate wle_estimate(const TestRecord& rec, const ItemBank& bank, InfoForm form) {
  if (rec.empty())
    throw ConfigError("wle_estimate: record is empty");

  std::vector<const ItemParameters*> items;
  std::vector<int> responses;
  items.reserve(rec.size());
  responses.reserve(rec.size());
  for (const auto& e : rec.entries) {
    items.push_back(&bank.item(bank.index_of(e.item_id)).params);
    responses.push_back(e.response);
  }

  // g(theta) = score + J/(2I) is the derivative of W = logL + 0.5 log I
  auto g_of = [&](double th) {
    const WleParts w = wle_parts(items, responses, th, form);
    if (w.info <= 0.0)
      throw DegenerateError("wle_estimate: zero total information");
    return w.score + w.dinfo / (2.0 * w.info);
  };
  auto w_of = [&](double th) {
    const WleParts w = wle_parts(items, responses, th, form);
    if (w.info <= 0.0) return -std::numeric_limits<double>::infinity();
    return w.loglik + 0.5 * std::log(w.info);
  };

  // Coarse scan for sign changes of g, then a safeguarded Newton inside each
  // bracket.  The objective can be multimodal for 3PL response patterns, so
  // every interior root competes with the interval edges on W itself.
  constexpr int kScan = 25;
  constexpr int kMaxIter = 100;
  constexpr double kTol = 1e-8;

  std::vector<double> xs(kScan), gs(kScan);
  for (int i = 0; i < kScan; ++i) {
    xs[i] = kThetaLo + (kThetaHi - kThetaLo) * i / (kScan - 1);
    gs[i] = g_of(xs[i]);
  }

  double best_theta = 0.0;
  double best_w = -std::numeric_limits<double>::infinity();
  bool best_is_edge = false;

  auto consider = [&](double th, bool edge) {
    const double w = w_of(th);
    if (w > best_w) {
      best_w = w;
      best_theta = th;
      best_is_edge = edge;
    }
  };

  // W rises into the left edge when g < 0 there, into the right when g > 0
  if (gs.front() < 0.0) consider(kThetaLo, true);
  if (gs.back() > 0.0) consider(kThetaHi, true);

  const double h = 1e-6;
  for (int i = 0; i + 1 < kScan; ++i) {
    if (gs[i] == 0.0) {
      consider(xs[i], false);
      continue;
    }
    if (gs[i] * gs[i + 1] > 0.0) continue;
    double lo = xs[i], hi = xs[i + 1];
    double glo = gs[i];
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxIter; ++it) {
      const double gx = g_of(x);
      if (gx == 0.0) break;
      if ((gx > 0.0) == (glo > 0.0)) {
        lo = x;
        glo = gx;
      } else {
        hi = x;
      }
      const double d = (g_of(x + h) - g_of(x - h)) / (2.0 * h);
      double xn = (std::isfinite(d) && d != 0.0) ? x - gx / d : 0.5 * (lo + hi);
      if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
      const double dx = std::abs(xn - x);
      x = xn;
      if (dx < kTol) break;
    }
    consider(x, false);
  }

  if (!std::isfinite(best_w)) {
    // no evaluable point; only possible with pathological parameter sets
    throw DegenerateError("wle_estimate: objective not finite anywhere on the bracket");
  }

  AbilityEstimate est;
  est.theta = best_theta;
  const WleParts atroot = wle_parts(items, responses, best_theta, form);
  est.se = atroot.info > 0.0 ? 1.0 / std::sqrt(atroot.info)
                             : std::numeric_limits<double>::infinity();
  est.estimator = Estimator::wle;
  est.items_used = static_cast<int>(rec.size());
  est.saturated = best_is_edge;
  return est;
}

}  // namespace irtcat
