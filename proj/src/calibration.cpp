#include "irtcat/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "irtcat/irt.hpp"

namespace irtcat {

PartitionPlan partition_items(const std::vector<std::string>& item_ids, int partition_min_size) {
  if (partition_min_size < 1)
    throw ConfigError("partition_items: partition_min_size must be positive");
  const int n = static_cast<int>(item_ids.size());
  if (n == 0)
    throw ConfigError("partition_items: no items");

  PartitionPlan plan;
  if (n < partition_min_size) {
    plan.groups.push_back(item_ids);
    plan.undersized = true;
    return plan;
  }
  const int k = n / partition_min_size;
  plan.groups.reserve(static_cast<std::size_t>(k));
  int start = 0;
  for (int g = 0; g < k; ++g) {
    const int len = (g + 1 < k) ? partition_min_size : n - start;
    plan.groups.emplace_back(item_ids.begin() + start, item_ids.begin() + start + len);
    start += len;
  }
  return plan;
}

LinkTransform mean_sigma_link(const std::vector<double>& theta_ref,
                              const std::vector<double>& theta_k) {
  if (theta_ref.size() != theta_k.size() || theta_ref.size() < 2)
    throw PairingError("mean_sigma_link: ability vectors must pair >= 2 common persons");
  const double n = static_cast<double>(theta_ref.size());
  double mr = 0.0, mk = 0.0;
  for (std::size_t i = 0; i < theta_ref.size(); ++i) {
    mr += theta_ref[i];
    mk += theta_k[i];
  }
  mr /= n;
  mk /= n;
  double vr = 0.0, vk = 0.0;
  for (std::size_t i = 0; i < theta_ref.size(); ++i) {
    vr += (theta_ref[i] - mr) * (theta_ref[i] - mr);
    vk += (theta_k[i] - mk) * (theta_k[i] - mk);
  }
  vr /= n;
  vk /= n;
  if (vk <= 0.0)
    throw DegenerateError("mean_sigma_link: linking abilities have zero spread");
  LinkTransform t;
  t.A = std::sqrt(vr) / std::sqrt(vk);
  t.B = mr - t.A * mk;
  return t;
}

LinkTransform inverse(const LinkTransform& t) {
  if (!(t.A > 0.0))
    throw ConfigError("inverse: link scale must be positive");
  return LinkTransform{1.0 / t.A, -t.B / t.A};
}

ItemParameters apply_link(const ItemParameters& p, const LinkTransform& t) {
  if (!(t.A > 0.0))
    throw ConfigError("apply_link: link scale must be positive");
  ItemParameters out;
  out.a = p.a / t.A;
  out.b = t.A * p.b + t.B;
  out.c = p.c;
  return out;
}

namespace {

constexpr double kZetaBox = 12.0;  // logit-space box for the guessing parameter

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

struct MstepBox {
  double lo[3];
  double hi[3];
};

inline void project(double* x, const MstepBox& box) {
  for (int i = 0; i < 3; ++i) x[i] = std::clamp(x[i], box.lo[i], box.hi[i]);
}

struct ItemStats {
  const double* r;  // expected corrects per node
  const double* n;  // expected attempts per node
};

ItemParameters x_to_params(const double* x, double c_max) {
  ItemParameters p;
  p.a = std::exp(x[0]);
  p.b = x[1];
  p.c = c_max * sigmoid(x[2]);
  return p;
}

void params_to_x(const ItemParameters& p, double c_max, const MstepBox& box, double* x) {
  x[0] = std::log(std::max(p.a, 1e-12));
  x[1] = p.b;
  const double frac = std::clamp(p.c / c_max, 1e-9, 1.0 - 1e-9);
  x[2] = logit(frac);
  project(x, box);
}

double expected_loglik(const ItemStats& st, const QuadratureGrid& grid, const ItemParameters& p,
                       const std::optional<BetaPrior>& prior) {
  double q_val = 0.0;
  const int nq = static_cast<int>(grid.nodes.size());
  for (int q = 0; q < nq; ++q) {
    double lp, lq;
    icc_log_probs(p, grid.nodes[q], &lp, &lq);
    q_val += st.r[q] * lp + (st.n[q] - st.r[q]) * lq;
  }
  if (prior)
    q_val += (prior->alpha - 1.0) * std::log(p.c) + (prior->beta - 1.0) * std::log1p(-p.c);
  return q_val;
}

// gradient of the expected log-likelihood in (log a, b, logit(c/c_max))
// coordinates plus a Fisher-scoring (expected negative Hessian) matrix
void grad_and_fisher(const ItemStats& st, const QuadratureGrid& grid, const double* x,
                     double c_max, const std::optional<BetaPrior>& prior, double* g, double* h) {
  const double a = std::exp(x[0]);
  const double b = x[1];
  const double sig = sigmoid(x[2]);
  const double c = c_max * sig;
  const double dcdx = c_max * sig * (1.0 - sig);

  for (int i = 0; i < 3; ++i) g[i] = 0.0;
  for (int i = 0; i < 9; ++i) h[i] = 0.0;

  const int nq = static_cast<int>(grid.nodes.size());
  for (int q = 0; q < nq; ++q) {
    const double th = grid.nodes[q];
    const double s = sigmoid(a * (th - b));
    const double p = c + (1.0 - c) * s;
    const double pq = p * (1.0 - p);
    if (pq <= 0.0) continue;
    const double dqdp = st.r[q] / p - (st.n[q] - st.r[q]) / (1.0 - p);
    const double core = (1.0 - c) * s * (1.0 - s);
    const double u0 = core * (th - b) * a;  // dp/d(log a)
    const double u1 = -core * a;            // dp/db
    const double u2 = (1.0 - s) * dcdx;     // dp/d(zeta)
    g[0] += dqdp * u0;
    g[1] += dqdp * u1;
    g[2] += dqdp * u2;
    const double w = st.n[q] / pq;
    h[0] += w * u0 * u0;
    h[1] += w * u0 * u1;
    h[2] += w * u0 * u2;
    h[4] += w * u1 * u1;
    h[5] += w * u1 * u2;
    h[8] += w * u2 * u2;
  }
  if (prior) {
    g[2] += ((prior->alpha - 1.0) / c - (prior->beta - 1.0) / (1.0 - c)) * dcdx;
    h[8] += ((prior->alpha - 1.0) / (c * c) +
             (prior->beta - 1.0) / ((1.0 - c) * (1.0 - c))) *
            dcdx * dcdx;
  }
  h[3] = h[1];
  h[6] = h[2];
  h[7] = h[5];
}

// solve h d = g for symmetric positive definite h (3x3), Cholesky
bool solve_spd3(const double* h, const double* g, double* d) {
  double l[9] = {0};
  const double ridge = 1e-8;
  double m[9];
  for (int i = 0; i < 9; ++i) m[i] = h[i];
  for (int i = 0; i < 3; ++i) m[i * 3 + i] += ridge * (1.0 + std::abs(h[i * 3 + i]));

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = m[i * 3 + j];
      for (int k = 0; k < j; ++k) sum -= l[i * 3 + k] * l[j * 3 + k];
      if (i == j) {
        if (sum <= 0.0) return false;
        l[i * 3 + i] = std::sqrt(sum);
      } else {
        l[i * 3 + j] = sum / l[j * 3 + j];
      }
    }
  }
  double y[3];
  for (int i = 0; i < 3; ++i) {
    double sum = g[i];
    for (int k = 0; k < i; ++k) sum -= l[i * 3 + k] * y[k];
    y[i] = sum / l[i * 3 + i];
  }
  for (int i = 2; i >= 0; --i) {
    double sum = y[i];
    for (int k = i + 1; k < 3; ++k) sum -= l[k * 3 + i] * d[k];
    d[i] = sum / l[i * 3 + i];
  }
  return true;
}

// Bounded ascent on the expected log-likelihood: Fisher-scoring direction,
// halving line search, accept only strict non-decreases so the outer EM is
// monotone by construction.
ItemParameters mstep_item(const ItemStats& st, const QuadratureGrid& grid,
                          const ItemParameters& start, const ParameterBounds& bounds,
                          const std::optional<BetaPrior>& prior) {
  MstepBox box;
  box.lo[0] = std::log(bounds.a_min);
  box.hi[0] = std::log(bounds.a_max);
  box.lo[1] = bounds.b_min;
  box.hi[1] = bounds.b_max;
  box.lo[2] = -kZetaBox;
  box.hi[2] = kZetaBox;

  double x[3];
  params_to_x(start, bounds.c_max, box, x);
  double q_cur = expected_loglik(st, grid, x_to_params(x, bounds.c_max), prior);

  for (int it = 0; it < 30; ++it) {
    double g[3], h[9], d[3];
    grad_and_fisher(st, grid, x, bounds.c_max, prior, g, h);
    if (!solve_spd3(h, g, d)) {
      d[0] = g[0];
      d[1] = g[1];
      d[2] = g[2];
    }
    double step = 1.0;
    bool accepted = false;
    double xn[3] = {x[0], x[1], x[2]};
    while (step >= 1e-7) {
      xn[0] = x[0] + step * d[0];
      xn[1] = x[1] + step * d[1];
      xn[2] = x[2] + step * d[2];
      project(xn, box);
      if (xn[0] == x[0] && xn[1] == x[1] && xn[2] == x[2]) break;  // pinned to the box
      const double q_new = expected_loglik(st, grid, x_to_params(xn, bounds.c_max), prior);
      if (q_new >= q_cur) {
        q_cur = q_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double dx = std::max({std::abs(xn[0] - x[0]), std::abs(xn[1] - x[1]),
                                std::abs(xn[2] - x[2])});
    x[0] = xn[0];
    x[1] = xn[1];
    x[2] = xn[2];
    if (dx < 1e-10) break;
  }
  return x_to_params(x, bounds.c_max);
}

double c_prior_term(const std::vector<ItemParameters>& params, const std::vector<char>& active,
                    const std::optional<BetaPrior>& prior) {
  if (!prior) return 0.0;
  double t = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (!active[j]) continue;
    t += (prior->alpha - 1.0) * std::log(params[j].c) +
         (prior->beta - 1.0) * std::log1p(-params[j].c);
  }
  return t;
}

}  // namespace

PartitionFit calibrate_partition(const ResponseMatrix& m, const CalibrationConfig& config) {
  const QuadratureGrid& grid = config.grid.nodes.empty() ? default_grid() : config.grid;
  const int nm = m.n_models();
  const int ni = m.n_items();
  const int nq = static_cast<int>(grid.nodes.size());
  if (nm < 1 || ni < 1)
    throw ConfigError("calibrate_partition: empty matrix");
  if (nm < 100)
    std::fprintf(stderr, "calibrate_partition: only %d models; estimates will be unstable\n", nm);

  PartitionFit fit;

  // Constant observed columns cannot be fit; park them on the difficulty
  // bound, flag them, and keep them out of the likelihood.
  std::vector<char> active(static_cast<std::size_t>(ni), 1);
  std::vector<ItemParameters> params(static_cast<std::size_t>(ni));
  for (int j = 0; j < ni; ++j) {
    int observed = 0, ones = 0;
    for (int r = 0; r < nm; ++r) {
      const std::int8_t v = m.at(r, j);
      if (v == ResponseMatrix::kMissing) continue;
      ++observed;
      ones += v;
    }
    const std::string& id = m.item_ids()[static_cast<std::size_t>(j)];
    if (observed == 0 || ones == 0 || ones == observed) {
      active[static_cast<std::size_t>(j)] = 0;
      fit.degenerate_items.insert(id);
      params[static_cast<std::size_t>(j)] =
          ItemParameters{config.bounds.a_min,
                         (observed > 0 && ones == observed) ? config.bounds.b_min
                                                            : config.bounds.b_max,
                         config.bounds.c_min};
      continue;
    }
    const double acc = std::clamp(static_cast<double>(ones) / observed, 0.02, 0.98);
    ItemParameters p0;
    p0.a = 1.0;
    p0.b = std::clamp(-logit(acc), -4.0, 4.0);
    p0.c = 0.125;
    params[static_cast<std::size_t>(j)] = p0;
  }

  std::vector<double> logw(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) logw[static_cast<std::size_t>(q)] = std::log(grid.weights[q]);

  std::vector<char> row_complete(static_cast<std::size_t>(nm), 1);
  bool any_incomplete = false;
  for (int r = 0; r < nm; ++r) {
    for (int j = 0; j < ni; ++j) {
      if (active[static_cast<std::size_t>(j)] && m.at(r, j) == ResponseMatrix::kMissing) {
        row_complete[static_cast<std::size_t>(r)] = 0;
        any_incomplete = true;
        break;
      }
    }
  }

  const std::size_t tab = static_cast<std::size_t>(ni) * static_cast<std::size_t>(nq);
  std::vector<double> lp_tab(tab), lq_tab(tab);
  std::vector<double> r_stat(tab), n_extra(any_incomplete ? tab : 0), n_shared(
      static_cast<std::size_t>(nq));
  std::vector<double> ll(static_cast<std::size_t>(nq)), h(static_cast<std::size_t>(nq));

  for (int iter = 0; iter < config.max_em_iterations; ++iter) {
    // refresh per-item per-node log probabilities
    for (int j = 0; j < ni; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      const ItemParameters& p = params[static_cast<std::size_t>(j)];
      double* lp_row = &lp_tab[static_cast<std::size_t>(j) * nq];
      double* lq_row = &lq_tab[static_cast<std::size_t>(j) * nq];
      for (int q = 0; q < nq; ++q)
        icc_log_probs(p, grid.nodes[q], &lp_row[q], &lq_row[q]);
    }

    // E-step
    std::fill(r_stat.begin(), r_stat.end(), 0.0);
    std::fill(n_shared.begin(), n_shared.end(), 0.0);
    std::fill(n_extra.begin(), n_extra.end(), 0.0);
    double marginal = 0.0;
    for (int r = 0; r < nm; ++r) {
      std::copy(logw.begin(), logw.end(), ll.begin());
      for (int j = 0; j < ni; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        const std::int8_t y = m.at(r, j);
        if (y == ResponseMatrix::kMissing) continue;
        const double* row = y ? &lp_tab[static_cast<std::size_t>(j) * nq]
                              : &lq_tab[static_cast<std::size_t>(j) * nq];
        for (int q = 0; q < nq; ++q) ll[static_cast<std::size_t>(q)] += row[q];
      }
      const double mx = *std::max_element(ll.begin(), ll.end());
      double denom = 0.0;
      for (int q = 0; q < nq; ++q) {
        h[static_cast<std::size_t>(q)] = std::exp(ll[static_cast<std::size_t>(q)] - mx);
        denom += h[static_cast<std::size_t>(q)];
      }
      marginal += mx + std::log(denom);
      const double inv = 1.0 / denom;
      for (int q = 0; q < nq; ++q) h[static_cast<std::size_t>(q)] *= inv;

      if (row_complete[static_cast<std::size_t>(r)]) {
        for (int q = 0; q < nq; ++q) n_shared[static_cast<std::size_t>(q)] +=
            h[static_cast<std::size_t>(q)];
      }
      for (int j = 0; j < ni; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        const std::int8_t y = m.at(r, j);
        if (y == ResponseMatrix::kMissing) continue;
        if (y == 1) {
          double* rr = &r_stat[static_cast<std::size_t>(j) * nq];
          for (int q = 0; q < nq; ++q) rr[q] += h[static_cast<std::size_t>(q)];
        }
        if (!row_complete[static_cast<std::size_t>(r)]) {
          double* ne = &n_extra[static_cast<std::size_t>(j) * nq];
          for (int q = 0; q < nq; ++q) ne[q] += h[static_cast<std::size_t>(q)];
        }
      }
    }

    fit.loglik_trace.push_back(marginal);
    fit.objective_trace.push_back(marginal + c_prior_term(params, active, config.c_prior));

    // M-step
    double delta = 0.0;
    std::vector<double> n_item(static_cast<std::size_t>(nq));
    for (int j = 0; j < ni; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      if (any_incomplete) {
        const double* ne = &n_extra[static_cast<std::size_t>(j) * nq];
        for (int q = 0; q < nq; ++q)
          n_item[static_cast<std::size_t>(q)] = n_shared[static_cast<std::size_t>(q)] + ne[q];
      }
      ItemStats st{&r_stat[static_cast<std::size_t>(j) * nq],
                   any_incomplete ? n_item.data() : n_shared.data()};
      const ItemParameters old = params[static_cast<std::size_t>(j)];
      const ItemParameters neu = mstep_item(st, grid, old, config.bounds, config.c_prior);
      params[static_cast<std::size_t>(j)] = neu;
      delta = std::max({delta, std::abs(neu.a - old.a), std::abs(neu.b - old.b),
                        std::abs(neu.c - old.c)});
    }

    fit.iterations = iter + 1;
    if (delta < config.em_tolerance) {
      fit.converged = true;
      break;
    }
  }

  // discrimination wedged against the lower box edge marks an item the data
  // wanted flat or inverted
  for (int j = 0; j < ni; ++j) {
    if (!active[static_cast<std::size_t>(j)]) continue;
    if (params[static_cast<std::size_t>(j)].a <= config.bounds.a_min * (1.0 + 1e-6))
      fit.degenerate_items.insert(m.item_ids()[static_cast<std::size_t>(j)]);
  }

  for (int j = 0; j < ni; ++j)
    fit.params[m.item_ids()[static_cast<std::size_t>(j)]] = params[static_cast<std::size_t>(j)];
  return fit;
}

namespace {

AbilityEstimate wle_for_row(const ResponseMatrix& m, int row, const std::vector<int>& cols,
                            const ItemBank& bank, std::vector<std::string> const& ids) {
  TestRecord rec;
  rec.entries.reserve(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const std::int8_t v = m.at(row, cols[k]);
    if (v == ResponseMatrix::kMissing) continue;
    rec.entries.push_back({ids[k], static_cast<int>(v)});
  }
  if (rec.empty()) {
    AbilityEstimate none;
    none.theta = std::numeric_limits<double>::quiet_NaN();
    return none;
  }
  return wle_estimate(rec, bank);
}

}  // namespace

CalibrationResult calibrate_bank(const ResponseMatrix& matrix, const CalibrationConfig& config) {
  if (config.partition_min_size < 100)
    throw ConfigError("calibrate_bank: partition_min_size must be >= 100");

  CalibrationResult result;
  PartitionPlan plan = partition_items(matrix.item_ids(), config.partition_min_size);
  result.undersized_partition = plan.undersized;
  const int n_parts = static_cast<int>(plan.groups.size());
  const int nm = matrix.n_models();

  // column indices per partition
  std::vector<std::vector<int>> part_cols(static_cast<std::size_t>(n_parts));
  for (int k = 0; k < n_parts; ++k)
    for (const std::string& id : plan.groups[static_cast<std::size_t>(k)])
      part_cols[static_cast<std::size_t>(k)].push_back(matrix.item_index(id));

  // independent EM runs, one thread per partition up to the hardware width
  result.fits.resize(static_cast<std::size_t>(n_parts));
  {
    std::atomic<int> next{0};
    const unsigned n_threads =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           static_cast<unsigned>(n_parts));
    auto worker = [&]() {
      std::vector<int> rows(static_cast<std::size_t>(nm));
      std::iota(rows.begin(), rows.end(), 0);
      for (int k = next.fetch_add(1); k < n_parts; k = next.fetch_add(1)) {
        const ResponseMatrix sub = matrix.select(rows, part_cols[static_cast<std::size_t>(k)]);
        result.fits[static_cast<std::size_t>(k)] = calibrate_partition(sub, config);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }
  for (const PartitionFit& f : result.fits)
    if (!f.converged) result.all_converged = false;

  // per-partition person abilities on each provisional scale
  std::vector<std::vector<double>> theta_part(static_cast<std::size_t>(n_parts));
  for (int k = 0; k < n_parts; ++k) {
    const auto& group = plan.groups[static_cast<std::size_t>(k)];
    ItemBank provisional;
    for (const std::string& id : group) {
      BankItem it;
      it.id = id;
      it.params = result.fits[static_cast<std::size_t>(k)].params.at(id);
      provisional.add(std::move(it));
    }
    auto& thetas = theta_part[static_cast<std::size_t>(k)];
    thetas.resize(static_cast<std::size_t>(nm));
    for (int r = 0; r < nm; ++r)
      thetas[static_cast<std::size_t>(r)] =
          wle_for_row(matrix, r, part_cols[static_cast<std::size_t>(k)], provisional, group)
              .theta;
  }

  // link every partition onto partition 1's metric via the common persons
  result.links.assign(static_cast<std::size_t>(n_parts), LinkTransform{});
  for (int k = 1; k < n_parts; ++k) {
    std::vector<double> ref, cur;
    for (int r = 0; r < nm; ++r) {
      const double t0 = theta_part[0][static_cast<std::size_t>(r)];
      const double tk = theta_part[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)];
      if (std::isnan(t0) || std::isnan(tk)) continue;
      ref.push_back(t0);
      cur.push_back(tk);
    }
    try {
      result.links[static_cast<std::size_t>(k)] = mean_sigma_link(ref, cur);
    } catch (const Error& e) {
      throw DegenerateError("calibrate_bank: linking partition " + std::to_string(k + 1) +
                            " failed: " + e.what());
    }
  }

  // assemble the bank with linked parameters and the post-calibration filter
  for (int k = 0; k < n_parts; ++k) {
    const PartitionFit& f = result.fits[static_cast<std::size_t>(k)];
    for (const std::string& id : plan.groups[static_cast<std::size_t>(k)]) {
      ItemParameters p = f.params.at(id);
      if (k > 0) p = apply_link(p, result.links[static_cast<std::size_t>(k)]);
      BankItem it;
      it.id = id;
      it.params = p;
      it.partition = k + 1;
      std::string why;
      if (f.degenerate_items.count(id)) why = "degenerate fit";
      if (p.a <= 0.0) why += why.empty() ? "non-positive discrimination"
                                         : "; non-positive discrimination";
      if (std::abs(p.b) > kOperationalMaxAbsB)
        why += why.empty() ? "extreme difficulty" : "; extreme difficulty";
      if (p.c > kOperationalMaxC)
        why += why.empty() ? "implausible guessing" : "; implausible guessing";
      if (!why.empty()) {
        it.filtered = true;
        it.notes = why;
      }
      result.bank.add(std::move(it));
    }
  }

  // whole-bank references over operational items only
  const std::vector<int> oper = result.bank.operational();
  if (oper.empty())
    throw EmptyError("calibrate_bank: no operational items survived the post-filter");
  std::vector<int> oper_cols;
  std::vector<std::string> oper_ids;
  for (int idx : oper) {
    oper_ids.push_back(result.bank.item(idx).id);
    oper_cols.push_back(matrix.item_index(oper_ids.back()));
  }
  std::vector<double> ref_thetas;
  for (int r = 0; r < nm; ++r) {
    AbilityEstimate est = wle_for_row(matrix, r, oper_cols, result.bank, oper_ids);
    if (std::isnan(est.theta)) continue;
    result.reference_thetas[matrix.model_ids()[static_cast<std::size_t>(r)]] = est;
    ref_thetas.push_back(est.theta);
  }
  if (ref_thetas.size() < 2)
    throw EmptyError("calibrate_bank: fewer than 2 models have reference abilities");

  double mean = 0.0;
  for (double t : ref_thetas) mean += t;
  mean /= static_cast<double>(ref_thetas.size());
  double var = 0.0;
  for (double t : ref_thetas) var += (t - mean) * (t - mean);
  var /= static_cast<double>(ref_thetas.size());
  if (var <= 0.0)
    throw DegenerateError("calibrate_bank: reference abilities have zero spread");
  result.bank.set_scale(mean, std::sqrt(var));
  return result;
}

}  // namespace irtcat
