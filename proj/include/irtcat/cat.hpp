#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "irtcat/bank.hpp"
#include "irtcat/rng.hpp"
#include "irtcat/types.hpp"
#include "json.hpp"

namespace irtcat {

struct CatConfig {
  double se_threshold = 0.3;
  int min_items = 30;
  int max_items = 500;
  int top_k = 5;
  InfoForm info_form = InfoForm::logistic;
  std::uint64_t rng_seed = 0;
  QuadratureGrid grid;  // empty -> default 81-node grid
};

enum class SessionStatus { active, converged, exhausted_max, bank_exhausted };
const char* to_string(SessionStatus s);

struct SessionEvent {
  int step = 0;  // 1-based
  std::string item_id;
  int response = 0;
  double theta = 0.0;
  double se = std::numeric_limits<double>::infinity();
  double info_of_item = 0.0;  // at the ability estimate used to select it
  double posterior_sd = std::numeric_limits<double>::infinity();
  std::optional<std::uint32_t> rng_draw;  // index drawn among the candidates
};

// One adaptive test.  Selection hands out exactly one pending item at a
// time; the matching submit_response must follow before the next selection.
class Session {
 public:
  Session(const ItemBank& bank, CatConfig config);

  // nearest-difficulty start rule: minimize |b - 0|, ties by larger a,
  // then by item id
  std::string select_first_item();

  // randomesque rule: uniform draw among the top_k unadministered
  // operational items by information at the current theta; returns nullopt
  // and flips status to bank_exhausted when nothing is left
  std::optional<std::string> select_next_item();

  // dispatches to the applicable selection rule
  std::optional<std::string> next_item();

  void submit_response(const std::string& item_id, int response);

  SessionStatus check_stopping() const;

  SessionStatus status() const { return status_; }
  const AbilityEstimate& current() const { return current_; }
  const TestRecord& record() const { return record_; }
  const std::vector<SessionEvent>& events() const { return events_; }
  const CatConfig& config() const { return config_; }
  bool has_pending() const { return pending_ >= 0; }

 private:
  void refresh_eap(double* theta, double* psd) const;

  const ItemBank* bank_;
  CatConfig config_;
  CounterRng rng_;
  std::vector<int> operational_;
  std::vector<char> administered_;
  int n_administered_ = 0;
  std::vector<double> lognodes_;  // accumulated log-likelihood per grid node
  TestRecord record_;
  AbilityEstimate current_;
  std::vector<SessionEvent> events_;
  SessionStatus status_ = SessionStatus::active;
  int pending_ = -1;
  double pending_info_ = 0.0;
  std::optional<std::uint32_t> pending_draw_;
};

using Responder = std::function<int(const std::string& item_id)>;

struct SessionResult {
  std::string respondent_id;
  std::uint64_t seed = 0;
  AbilityEstimate estimate;
  TestRecord record;
  SessionStatus status = SessionStatus::active;
  std::vector<SessionEvent> events;
  std::string error;  // nonempty when the session aborted

  bool completed() const { return error.empty() && status != SessionStatus::active; }
};

SessionResult run_session(const ItemBank& bank, const CatConfig& config, Responder responder,
                          const std::string& respondent_id);

struct Respondent {
  std::string id;
  Responder responder;
};

struct BatchResult {
  std::vector<SessionResult> sessions;
  nlohmann::ordered_json manifest;
};

// Independent sessions with per-respondent RNG substreams derived from
// (config.rng_seed, respondent id).  Session failures are isolated.
BatchResult batch_run(const ItemBank& bank, const CatConfig& config,
                      const std::vector<Respondent>& respondents);

// JSON Lines: one event object per administered item, then a terminal
// status line.
std::string session_log_jsonl(const SessionResult& result);

}  // namespace irtcat
