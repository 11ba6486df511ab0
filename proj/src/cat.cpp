#include "irtcat/cat.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "irtcat/irt.hpp"
#include "irtcat/version.hpp"

namespace irtcat {

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::converged: return "converged";
    case SessionStatus::exhausted_max: return "exhausted_max";
    case SessionStatus::bank_exhausted: return "bank_exhausted";
  }
  return "unknown";
}

Session::Session(const ItemBank& bank, CatConfig config)
    : bank_(&bank), config_(std::move(config)), rng_(config_.rng_seed) {
  if (config_.min_items < 1 || config_.min_items > config_.max_items)
    throw ConfigError("Session: need 0 < min_items <= max_items");
  if (config_.top_k < 1)
    throw ConfigError("Session: top_k must be >= 1");
  if (!(config_.se_threshold > 0.0))
    throw ConfigError("Session: se_threshold must be positive");
  if (config_.grid.nodes.empty()) config_.grid = default_grid();

  operational_ = bank_->operational();
  if (static_cast<int>(operational_.size()) < config_.min_items)
    throw ConfigError("Session: bank has " + std::to_string(operational_.size()) +
                      " operational items but min_items is " +
                      std::to_string(config_.min_items));
  administered_.assign(static_cast<std::size_t>(bank_->size()), 0);
  lognodes_.assign(config_.grid.nodes.size(), 0.0);
  current_.theta = 0.0;
  current_.se = std::numeric_limits<double>::infinity();
  current_.estimator = Estimator::eap;
}

std::string Session::select_first_item() {
  if (!record_.empty())
    throw ProtocolError("select_first_item: session already started");
  if (pending_ >= 0)
    throw ProtocolError("select_first_item: an item is already pending");
  if (status_ != SessionStatus::active)
    throw ProtocolError("select_first_item: session is not active");

  int best = -1;
  for (int idx : operational_) {
    if (best < 0) {
      best = idx;
      continue;
    }
    const ItemParameters& p = bank_->item(idx).params;
    const ItemParameters& q = bank_->item(best).params;
    const double dp = std::abs(p.b);
    const double dq = std::abs(q.b);
    if (dp < dq || (dp == dq && (p.a > q.a || (p.a == q.a && bank_->item(idx).id <
                                                                bank_->item(best).id))))
      best = idx;
  }
  pending_ = best;
  pending_info_ = fisher_info(bank_->item(best).params, current_.theta, config_.info_form);
  pending_draw_.reset();
  return bank_->item(best).id;
}

std::optional<std::string> Session::select_next_item() {
  if (record_.empty())
    throw ProtocolError("select_next_item: use select_first_item at step 0");
  if (pending_ >= 0)
    throw ProtocolError("select_next_item: an item is already pending");
  if (status_ != SessionStatus::active)
    throw ProtocolError("select_next_item: session is not active");

  struct Cand {
    double info;
    int idx;
  };
  std::vector<Cand> cands;
  cands.reserve(operational_.size());
  for (int idx : operational_) {
    if (administered_[static_cast<std::size_t>(idx)]) continue;
    cands.push_back({fisher_info(bank_->item(idx).params, current_.theta, config_.info_form),
                     idx});
  }
  if (cands.empty()) {
    status_ = SessionStatus::bank_exhausted;
    return std::nullopt;
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config_.top_k),
                                              cands.size());
  auto by_rank = [&](const Cand& x, const Cand& y) {
    if (x.info != y.info) return x.info > y.info;
    return bank_->item(x.idx).id < bank_->item(y.idx).id;
  };
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(),
                    by_rank);
  const std::uint32_t draw = rng_.next_below(static_cast<std::uint32_t>(k));
  pending_ = cands[draw].idx;
  // stash selection context for the event written at submit time
  pending_info_ = cands[draw].info;
  pending_draw_ = draw;
  return bank_->item(pending_).id;
}

std::optional<std::string> Session::next_item() {
  if (status_ != SessionStatus::active) return std::nullopt;
  if (record_.empty()) return select_first_item();
  return select_next_item();
}

void Session::refresh_eap(double* theta, double* psd) const {
  const QuadratureGrid& grid = config_.grid;
  const int nq = static_cast<int>(grid.nodes.size());
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) {
    lp[static_cast<std::size_t>(q)] = lognodes_[static_cast<std::size_t>(q)] +
                                      std::log(grid.weights[q]);
    mx = std::max(mx, lp[static_cast<std::size_t>(q)]);
  }
  if (!std::isfinite(mx))
    throw DegenerateError("Session: posterior mass underflowed at every node");
  double norm = 0.0, mean = 0.0;
  for (int q = 0; q < nq; ++q) {
    const double g = std::exp(lp[static_cast<std::size_t>(q)] - mx);
    norm += g;
    mean += grid.nodes[q] * g;
  }
  mean /= norm;
  double var = 0.0;
  for (int q = 0; q < nq; ++q) {
    const double d = grid.nodes[q] - mean;
    var += d * d * std::exp(lp[static_cast<std::size_t>(q)] - mx);
  }
  *theta = mean;
  *psd = std::sqrt(std::max(var / norm, 0.0));
}

void Session::submit_response(const std::string& item_id, int response) {
  if (status_ != SessionStatus::active)
    throw ProtocolError("submit_response: session is not active");
  if (pending_ < 0)
    throw ProtocolError("submit_response: no item is pending");
  if (bank_->item(pending_).id != item_id) {
    const int fidx = bank_->find(item_id);
    if (fidx >= 0 && administered_[static_cast<std::size_t>(fidx)])
      throw ProtocolError("submit_response: item '" + item_id + "' was already answered");
    throw ProtocolError("submit_response: item '" + item_id + "' was not selected");
  }
  if (response != 0 && response != 1)
    throw ConfigError("submit_response: response must be 0 or 1");

  const int idx = pending_;
  pending_ = -1;
  const BankItem& it = bank_->item(idx);
  administered_[static_cast<std::size_t>(idx)] = 1;
  ++n_administered_;
  record_.entries.push_back({it.id, response});

  const QuadratureGrid& grid = config_.grid;
  for (std::size_t q = 0; q < grid.nodes.size(); ++q) {
    double lpc, lqc;
    icc_log_probs(it.params, grid.nodes[q], &lpc, &lqc);
    lognodes_[q] += response ? lpc : lqc;
  }

  double theta = 0.0, psd = 0.0;
  refresh_eap(&theta, &psd);
  const double se = se_from_info(record_, *bank_, theta, config_.info_form);

  current_.theta = theta;
  current_.se = se;
  current_.items_used = static_cast<int>(record_.size());
  record_.trajectory.push_back({theta, se});

  SessionEvent ev;
  ev.step = static_cast<int>(record_.size());
  ev.item_id = it.id;
  ev.response = response;
  ev.theta = theta;
  ev.se = se;
  ev.info_of_item = pending_info_;
  ev.posterior_sd = psd;
  ev.rng_draw = pending_draw_;
  events_.push_back(std::move(ev));
  pending_info_ = 0.0;
  pending_draw_.reset();

  status_ = check_stopping();
}

SessionStatus Session::check_stopping() const {
  const int n = static_cast<int>(record_.size());
  if (n >= config_.min_items && std::isfinite(current_.se) &&
      current_.se <= config_.se_threshold)
    return SessionStatus::converged;
  if (n >= config_.max_items) return SessionStatus::exhausted_max;
  if (n_administered_ >= static_cast<int>(operational_.size()))
    return SessionStatus::bank_exhausted;
  return SessionStatus::active;
}

SessionResult run_session(const ItemBank& bank, const CatConfig& config, Responder responder,
                          const std::string& respondent_id) {
  SessionResult out;
  out.respondent_id = respondent_id;
  out.seed = config.rng_seed;
  std::optional<Session> s;
  try {
    s.emplace(bank, config);
    while (s->status() == SessionStatus::active) {
      const std::optional<std::string> item = s->next_item();
      if (!item) break;
      const int y = responder(*item);
      if (y != 0 && y != 1)
        throw ResponderError("responder returned " + std::to_string(y) +
                             " for item '" + *item + "' (want 0 or 1)");
      s->submit_response(*item, y);
    }
  } catch (const Error& e) {
    out.error = e.what();
  } catch (const std::exception& e) {
    out.error = std::string("responder exception: ") + e.what();
  }
  if (s) {  // aborted sessions keep their partial record and trajectory
    out.estimate = s->current();
    out.record = s->record();
    out.status = s->status();
    out.events = s->events();
  }
  return out;
}

namespace {

nlohmann::ordered_json config_echo(const CatConfig& c) {
  nlohmann::ordered_json j;
  j["se_threshold"] = c.se_threshold;
  j["min_items"] = c.min_items;
  j["max_items"] = c.max_items;
  j["top_k"] = c.top_k;
  j["info_form"] = c.info_form == InfoForm::logistic ? "logistic" : "exact3pl";
  j["grid_nodes"] = c.grid.nodes.empty() ? default_grid().nodes.size() : c.grid.nodes.size();
  return j;
}

}  // namespace

BatchResult batch_run(const ItemBank& bank, const CatConfig& config,
                      const std::vector<Respondent>& respondents) {
  {
    std::unordered_map<std::string, int> seen;
    for (const auto& r : respondents)
      if (++seen[r.id] > 1)
        throw ConfigError("batch_run: duplicate respondent id '" + r.id + "'");
  }

  BatchResult out;
  out.sessions.reserve(respondents.size());
  auto sessions_json = nlohmann::ordered_json::array();
  for (const auto& r : respondents) {
    CatConfig per = config;
    per.rng_seed = CounterRng::derive_key(config.rng_seed, "cat/" + r.id);
    SessionResult res = run_session(bank, per, r.responder, r.id);
    res.seed = per.rng_seed;

    nlohmann::ordered_json s;
    s["respondent_id"] = res.respondent_id;
    s["seed"] = res.seed;
    s["status"] = to_string(res.status);
    s["theta"] = res.estimate.theta;
    s["se"] = res.estimate.se;
    s["n_items"] = res.record.size();
    if (!res.error.empty()) s["error"] = res.error;
    sessions_json.push_back(std::move(s));
    out.sessions.push_back(std::move(res));
  }

  nlohmann::ordered_json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["rng_seed"] = config.rng_seed;
  manifest["config"] = config_echo(config);
  auto oper_ids = nlohmann::json::array();
  for (int idx : bank.operational()) oper_ids.push_back(bank.item(idx).id);
  manifest["bank"] = {{"n_items", bank.size()},
                      {"n_operational", oper_ids.size()},
                      {"operational_item_ids", std::move(oper_ids)}};
  manifest["sessions"] = std::move(sessions_json);
  out.manifest = std::move(manifest);
  return out;
}

std::string session_log_jsonl(const SessionResult& result) {
  std::string out;
  for (const SessionEvent& e : result.events) {
    nlohmann::ordered_json j;
    j["step"] = e.step;
    j["item_id"] = e.item_id;
    j["response"] = e.response;
    j["theta"] = e.theta;
    j["se"] = e.se;
    j["info_of_item"] = e.info_of_item;
    j["rng_draw"] = e.rng_draw ? nlohmann::ordered_json(*e.rng_draw)
                               : nlohmann::ordered_json(nullptr);
    j["posterior_sd"] = e.posterior_sd;
    out += j.dump();
    out += '\n';
  }
  nlohmann::ordered_json t;
  t["status"] = to_string(result.status);
  t["theta"] = result.estimate.theta;
  t["se"] = result.estimate.se;
  t["n_items"] = result.record.size();
  if (!result.error.empty()) t["error"] = result.error;
  out += t.dump();
  out += '\n';
  return out;
}

}  // namespace irtcat
