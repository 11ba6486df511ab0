#include "irtcat/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace irtcat {

void FilterReport::absorb(const FilterReport& stage) {
  models_removed_incomplete += stage.models_removed_incomplete;
  models_removed_extreme += stage.models_removed_extreme;
  items_removed_low_variance += stage.items_removed_low_variance;
  items_removed_ceiling += stage.items_removed_ceiling;
  items_removed_discrimination += stage.items_removed_discrimination;
  if (!stage.per_item_rpb.empty()) per_item_rpb = stage.per_item_rpb;
  removed_model_ids.insert(removed_model_ids.end(), stage.removed_model_ids.begin(),
                           stage.removed_model_ids.end());
  removed_item_ids.insert(removed_item_ids.end(), stage.removed_item_ids.begin(),
                          stage.removed_item_ids.end());
  retained_models = stage.retained_models;
  retained_items = stage.retained_items;
}

std::string report_to_json(const FilterReport& r) {
  nlohmann::ordered_json j;
  j["input_models"] = r.input_models;
  j["input_items"] = r.input_items;
  j["retained_models"] = r.retained_models;
  j["retained_items"] = r.retained_items;
  j["models_removed_incomplete"] = r.models_removed_incomplete;
  j["models_removed_extreme"] = r.models_removed_extreme;
  j["items_removed_low_variance"] = r.items_removed_low_variance;
  j["items_removed_ceiling"] = r.items_removed_ceiling;
  j["items_removed_discrimination"] = r.items_removed_discrimination;
  j["per_item_rpb"] = nlohmann::ordered_json::object();
  for (const auto& [id, v] : r.per_item_rpb) j["per_item_rpb"][id] = v;
  j["removed_model_ids"] = r.removed_model_ids;
  j["removed_item_ids"] = r.removed_item_ids;
  return j.dump(2) + "\n";
}

namespace {

std::vector<int> all_indices(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

std::pair<ResponseMatrix, FilterReport> filter_models(const ResponseMatrix& m,
                                                      double percentile_floor) {
  if (percentile_floor < 0.0 || percentile_floor >= 1.0)
    throw ConfigError("filter_models: percentile_floor must lie in [0, 1)");

  FilterReport rep;
  rep.input_models = m.n_models();
  rep.input_items = m.n_items();

  std::vector<int> complete;
  for (int r = 0; r < m.n_models(); ++r) {
    if (m.row_complete(r)) {
      complete.push_back(r);
    } else {
      ++rep.models_removed_incomplete;
      rep.removed_model_ids.push_back(m.model_ids()[static_cast<std::size_t>(r)]);
    }
  }
  if (complete.empty())
    throw EmptyError("filter_models: no model has complete responses");

  // nearest-rank floor: drop the k lowest totals, ties by model id
  const int k = static_cast<int>(std::floor(percentile_floor * complete.size()));
  std::vector<int> keep = complete;
  if (k > 0) {
    std::vector<std::pair<int, int>> scored;  // (total, row)
    scored.reserve(complete.size());
    for (int r : complete) scored.emplace_back(m.row_total(r), r);
    std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first < y.first;
      return m.model_ids()[static_cast<std::size_t>(x.second)] <
             m.model_ids()[static_cast<std::size_t>(y.second)];
    });
    std::vector<char> dropped(static_cast<std::size_t>(m.n_models()), 0);
    for (int i = 0; i < k; ++i) {
      dropped[static_cast<std::size_t>(scored[static_cast<std::size_t>(i)].second)] = 1;
      rep.removed_model_ids.push_back(
          m.model_ids()[static_cast<std::size_t>(scored[static_cast<std::size_t>(i)].second)]);
      ++rep.models_removed_extreme;
    }
    keep.clear();
    for (int r : complete)
      if (!dropped[static_cast<std::size_t>(r)]) keep.push_back(r);
  }
  if (keep.empty())
    throw EmptyError("filter_models: extreme-score floor removed every model");

  ResponseMatrix out = m.select(keep, all_indices(m.n_items()));
  rep.retained_models = out.n_models();
  rep.retained_items = out.n_items();
  return {std::move(out), std::move(rep)};
}

std::pair<ResponseMatrix, FilterReport> filter_items_variance(const ResponseMatrix& m,
                                                              double sd_floor,
                                                              double acc_ceiling) {
  FilterReport rep;
  rep.input_models = m.n_models();
  rep.input_items = m.n_items();

  std::vector<int> keep;
  for (int j = 0; j < m.n_items(); ++j) {
    int n = 0, ones = 0;
    for (int r = 0; r < m.n_models(); ++r) {
      const std::int8_t v = m.at(r, j);
      if (v == ResponseMatrix::kMissing) continue;
      ++n;
      ones += v;
    }
    if (n == 0) {
      ++rep.items_removed_low_variance;
      rep.removed_item_ids.push_back(m.item_ids()[static_cast<std::size_t>(j)]);
      continue;
    }
    const double acc = static_cast<double>(ones) / n;
    const double sd = std::sqrt(acc * (1.0 - acc));
    if (sd < sd_floor) {
      ++rep.items_removed_low_variance;
      rep.removed_item_ids.push_back(m.item_ids()[static_cast<std::size_t>(j)]);
    } else if (acc > acc_ceiling) {
      ++rep.items_removed_ceiling;
      rep.removed_item_ids.push_back(m.item_ids()[static_cast<std::size_t>(j)]);
    } else {
      keep.push_back(j);
    }
  }
  if (keep.empty())
    throw EmptyError("filter_items_variance: every item removed");

  ResponseMatrix out = m.select(all_indices(m.n_models()), keep);
  rep.retained_models = out.n_models();
  rep.retained_items = out.n_items();
  return {std::move(out), std::move(rep)};
}

double point_biserial(const std::vector<int>& item_column, const std::vector<double>& totals) {
  if (item_column.size() != totals.size() || item_column.empty())
    throw ConfigError("point_biserial: vectors must be nonempty and equally sized");
  const std::size_t n = totals.size();

  double mean_t = 0.0;
  for (double t : totals) mean_t += t;
  mean_t /= static_cast<double>(n);
  double var_t = 0.0;
  for (double t : totals) var_t += (t - mean_t) * (t - mean_t);
  var_t /= static_cast<double>(n);
  const double sd_t = std::sqrt(var_t);

  std::size_t n1 = 0;
  double sum1 = 0.0, sum0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (item_column[i]) {
      ++n1;
      sum1 += totals[i];
    } else {
      sum0 += totals[i];
    }
  }
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0)
    throw DegenerateError("point_biserial: item column is constant");
  if (sd_t == 0.0)
    throw DegenerateError("point_biserial: totals have zero variance");

  const double p = static_cast<double>(n1) / static_cast<double>(n);
  const double q = 1.0 - p;
  const double m1 = sum1 / static_cast<double>(n1);
  const double m0 = sum0 / static_cast<double>(n0);
  return (m1 - m0) / sd_t * std::sqrt(p * q);
}

std::pair<ResponseMatrix, FilterReport> filter_items_discrimination(const ResponseMatrix& m,
                                                                    double rpb_floor) {
  if (m.n_models() < 2)
    throw ConfigError("filter_items_discrimination: need at least 2 models");

  FilterReport rep;
  rep.input_models = m.n_models();
  rep.input_items = m.n_items();

  std::vector<int> keep;
  for (int j = 0; j < m.n_items(); ++j) {
    // pairwise-complete: models missing this item contribute neither a
    // response nor a total
    std::vector<int> col;
    std::vector<double> tot;
    col.reserve(static_cast<std::size_t>(m.n_models()));
    tot.reserve(static_cast<std::size_t>(m.n_models()));
    for (int r = 0; r < m.n_models(); ++r) {
      const std::int8_t v = m.at(r, j);
      if (v == ResponseMatrix::kMissing) continue;
      col.push_back(v);
      tot.push_back(static_cast<double>(m.row_total(r)));
    }
    bool drop;
    if (col.empty()) {
      drop = true;
    } else {
      try {
        const double rpb = point_biserial(col, tot);
        rep.per_item_rpb[m.item_ids()[static_cast<std::size_t>(j)]] = rpb;
        drop = rpb < rpb_floor;
      } catch (const DegenerateError&) {
        drop = true;  // undefined correlation is treated as non-diagnostic
      }
    }
    if (drop) {
      ++rep.items_removed_discrimination;
      rep.removed_item_ids.push_back(m.item_ids()[static_cast<std::size_t>(j)]);
    } else {
      keep.push_back(j);
    }
  }
  if (keep.empty())
    throw EmptyError("filter_items_discrimination: every item removed");

  ResponseMatrix out = m.select(all_indices(m.n_models()), keep);
  rep.retained_models = out.n_models();
  rep.retained_items = out.n_items();
  return {std::move(out), std::move(rep)};
}

std::pair<ResponseMatrix, FilterReport> preprocess(const ResponseMatrix& m,
                                                   const FilterConfig& config) {
  auto [m1, r1] = filter_models(m, config.percentile_floor);
  auto [m2, r2] = filter_items_variance(m1, config.sd_floor, config.acc_ceiling);
  auto [m3, r3] = filter_items_discrimination(m2, config.rpb_floor);

  FilterReport rep;
  rep.input_models = m.n_models();
  rep.input_items = m.n_items();
  rep.absorb(r1);
  rep.absorb(r2);
  rep.absorb(r3);
  return {std::move(m3), std::move(rep)};
}

}  // namespace irtcat
