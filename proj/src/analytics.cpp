#include "irtcat/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace irtcat {

namespace {

// compensated accumulation so batch metrics do not depend on session order
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

BatchSummary summarize_batch(const std::vector<SessionResult>& results, const ItemBank& bank) {
  BatchSummary out;
  for (int idx : bank.operational()) out.bank_items.push_back(bank.item(idx).id);
  for (const SessionResult& r : results) {
    if (!r.completed()) continue;
    SessionSummary s;
    s.respondent_id = r.respondent_id;
    s.theta = r.estimate.theta;
    s.se = r.estimate.se;
    s.n_items = static_cast<int>(r.record.size());
    s.status = r.status;
    int correct = 0;
    for (const auto& e : r.record.entries) {
      s.items.push_back(e.item_id);
      correct += e.response;
    }
    s.accuracy = s.items.empty() ? 0.0 : static_cast<double>(correct) /
                                             static_cast<double>(s.items.size());
    out.sessions.push_back(std::move(s));
  }
  return out;
}

double mae(const std::map<std::string, double>& estimates,
           const std::map<std::string, double>& references) {
  if (estimates.empty())
    throw ConfigError("mae: empty input");
  if (estimates.size() != references.size())
    throw PairingError("mae: key sets differ in size");
  KahanSum acc;
  auto it2 = references.begin();
  for (auto it1 = estimates.begin(); it1 != estimates.end(); ++it1, ++it2) {
    if (it1->first != it2->first)
      throw PairingError("mae: key mismatch at '" + it1->first + "' vs '" + it2->first + "'");
    acc.add(std::abs(it1->second - it2->second));
  }
  return acc.sum / static_cast<double>(estimates.size());
}

namespace {

std::map<std::string, int> exposure_counts(const BatchSummary& batch) {
  std::map<std::string, int> counts;
  for (const std::string& id : batch.bank_items) counts[id] = 0;
  for (const SessionSummary& s : batch.sessions)
    for (const std::string& id : s.items) {
      auto it = counts.find(id);
      if (it == counts.end())
        throw PairingError("exposure: administered item '" + id +
                           "' is not in the bank item list");
      ++it->second;
    }
  return counts;
}

}  // namespace

ExposureReport exposure_rates(const BatchSummary& batch) {
  const std::size_t n_sessions = batch.sessions.size();
  if (n_sessions == 0)
    throw ConfigError("exposure_rates: no sessions");
  if (batch.bank_items.empty())
    throw ConfigError("exposure_rates: empty bank item list");

  const std::map<std::string, int> counts = exposure_counts(batch);
  ExposureReport rep;
  long long total = 0;
  for (const auto& [id, h] : counts) {
    const double rate = static_cast<double>(h) / static_cast<double>(n_sessions);
    rep.per_item[id] = rate;
    rep.max = std::max(rep.max, rate);
    total += h;
  }
  rep.average = static_cast<double>(total) /
                (static_cast<double>(batch.bank_items.size()) *
                 static_cast<double>(n_sessions));
  return rep;
}

double overlap_chen(const BatchSummary& batch) {
  const double n = static_cast<double>(batch.sessions.size());
  if (batch.sessions.size() < 2)
    throw DegenerateError("overlap_chen: need at least 2 sessions");
  double mean_len = 0.0;
  for (const SessionSummary& s : batch.sessions) mean_len += static_cast<double>(s.n_items);
  mean_len /= n;
  if (!(mean_len > 0.0))
    throw DegenerateError("overlap_chen: zero mean session length");

  const std::map<std::string, int> counts = exposure_counts(batch);
  KahanSum sum_p2;
  for (const auto& [id, h] : counts) {
    const double p = static_cast<double>(h) / n;
    sum_p2.add(p * p);
  }
  return (n * sum_p2.sum) / (mean_len * (n - 1.0)) - 1.0 / (n - 1.0);
}

double overlap_jaccard(const BatchSummary& batch) {
  const std::size_t n = batch.sessions.size();
  if (n < 2)
    throw DegenerateError("overlap_jaccard: need at least 2 sessions");

  // sessions as sorted index sets for linear-time pair intersections
  std::unordered_map<std::string, int> index;
  index.reserve(batch.bank_items.size());
  for (const std::string& id : batch.bank_items)
    index.emplace(id, static_cast<int>(index.size()));
  std::vector<std::vector<int>> sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::string& id : batch.sessions[i].items) {
      auto it = index.find(id);
      if (it == index.end())
        throw PairingError("overlap_jaccard: administered item '" + id +
                           "' is not in the bank item list");
      sets[i].push_back(it->second);
    }
    std::sort(sets[i].begin(), sets[i].end());
  }

  KahanSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t a = 0, b = 0, inter = 0;
      while (a < sets[i].size() && b < sets[j].size()) {
        if (sets[i][a] == sets[j][b]) {
          ++inter;
          ++a;
          ++b;
        } else if (sets[i][a] < sets[j][b]) {
          ++a;
        } else {
          ++b;
        }
      }
      const std::size_t uni = sets[i].size() + sets[j].size() - inter;
      acc.add(uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni));
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return acc.sum / pairs;
}

namespace {

// average ranks, 1 = smallest value when ascending, 1 = largest otherwise
std::vector<double> average_ranks(const std::vector<double>& v, bool descending) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? v[a] > v[b] : v[a] < v[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw DegenerateError("correlation undefined: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("spearman: need two equally sized vectors of length >= 2");
  return pearson(average_ranks(x, false), average_ranks(y, false));
}

double kendall(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("kendall: need two equally sized vectors of length >= 2");
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      const double prod = dx * dy;
      if (prod > 0.0)
        ++concordant;
      else if (prod < 0.0)
        ++discordant;
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

RankShiftReport rank_shift_report(const std::map<std::string, double>& acc_scores,
                                  const std::map<std::string, double>& thetas, int threshold) {
  if (acc_scores.size() != thetas.size())
    throw PairingError("rank_shift_report: key sets differ in size");
  if (acc_scores.size() < 2)
    throw ConfigError("rank_shift_report: need at least 2 respondents");

  std::vector<std::string> ids;
  std::vector<double> acc, th;
  auto it2 = thetas.begin();
  for (auto it1 = acc_scores.begin(); it1 != acc_scores.end(); ++it1, ++it2) {
    if (it1->first != it2->first)
      throw PairingError("rank_shift_report: key mismatch at '" + it1->first + "'");
    ids.push_back(it1->first);
    acc.push_back(it1->second);
    th.push_back(it2->second);
  }

  const std::vector<double> r_acc = average_ranks(acc, true);
  const std::vector<double> r_th = average_ranks(th, true);

  RankShiftReport rep;
  rep.threshold = threshold;
  int shifted = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double d = r_acc[i] - r_th[i];
    rep.rank_delta[ids[i]] = d;
    if (std::abs(d) > threshold) ++shifted;
  }
  rep.shifted_fraction = static_cast<double>(shifted) / static_cast<double>(ids.size());

  // same observable accuracy, different latent estimate
  std::map<double, std::vector<std::size_t>> by_acc;
  for (std::size_t i = 0; i < ids.size(); ++i) by_acc[acc[i]].push_back(i);
  for (const auto& [a, group] : by_acc) {
    (void)a;
    for (std::size_t p = 0; p < group.size(); ++p)
      for (std::size_t q = p + 1; q < group.size(); ++q)
        if (th[group[p]] != th[group[q]])
          rep.equal_accuracy_pairs.emplace_back(ids[group[p]], ids[group[q]], th[group[p]],
                                                th[group[q]]);
  }
  return rep;
}

nlohmann::ordered_json metrics_report(const BatchSummary& batch,
                                      const std::map<std::string, double>* references,
                                      int rank_threshold) {
  nlohmann::ordered_json j;

  std::map<std::string, double> theta_cat, session_acc;
  for (const SessionSummary& s : batch.sessions) {
    theta_cat[s.respondent_id] = s.theta;
    session_acc[s.respondent_id] = s.accuracy;
  }

  // reference-paired metrics over respondents present on both sides
  if (references) {
    std::map<std::string, double> est, ref;
    std::vector<double> ve, vr;
    for (const auto& [id, t] : theta_cat) {
      auto it = references->find(id);
      if (it == references->end()) continue;
      est[id] = t;
      ref[id] = it->second;
      ve.push_back(t);
      vr.push_back(it->second);
    }
    if (est.size() >= 1) j["mae"] = mae(est, ref);
    if (ve.size() >= 2) {
      try {
        j["spearman"] = spearman(ve, vr);
      } catch (const DegenerateError&) {
        j["spearman"] = nullptr;
      }
      j["kendall"] = kendall(ve, vr);
    }
  }

  double total_items = 0.0;
  for (const SessionSummary& s : batch.sessions) total_items += s.n_items;
  j["avg_items"] = batch.sessions.empty() ? 0.0 : total_items /
                                                      static_cast<double>(
                                                          batch.sessions.size());
  j["n_sessions"] = batch.sessions.size();

  if (!batch.sessions.empty()) {
    const ExposureReport exp = exposure_rates(batch);
    j["exposure"] = nlohmann::ordered_json{{"avg", exp.average}, {"max", exp.max}};
    auto per_item = nlohmann::ordered_json::object();
    for (const auto& [id, rate] : exp.per_item) per_item[id] = rate;
    j["exposure"]["per_item"] = std::move(per_item);
  }

  if (batch.sessions.size() >= 2) {
    j["overlap"] =
        nlohmann::ordered_json{{"chen", overlap_chen(batch)}, {"jaccard", overlap_jaccard(batch)}};
    const RankShiftReport rs = rank_shift_report(session_acc, theta_cat, rank_threshold);
    nlohmann::ordered_json rj;
    rj["threshold"] = rs.threshold;
    rj["fraction"] = rs.shifted_fraction;
    rj["accuracy_source"] = "session_records";
    rj["n_equal_accuracy_pairs"] = rs.equal_accuracy_pairs.size();
    // bounded sample; the full list can be quadratic in the batch size
    constexpr std::size_t kMaxPairs = 100;
    auto pairs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rs.equal_accuracy_pairs.size() && i < kMaxPairs; ++i) {
      const auto& [a, b, ta, tb] = rs.equal_accuracy_pairs[i];
      pairs.push_back({{"a", a}, {"b", b}, {"theta_a", ta}, {"theta_b", tb}});
    }
    rj["pairs"] = std::move(pairs);
    j["rank_shift"] = std::move(rj);
  }
  return j;
}

}  // namespace irtcat
