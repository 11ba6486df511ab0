// Command-line pipeline: preprocess, calibrate, run, simulate, metrics.
// Data goes to files, diagnostics to stderr.  Exit codes: 0 success,
// 2 input validation, 3 calibration failure, 4 no sessions completed.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "irtcat/analytics.hpp"
#include "irtcat/bank.hpp"
#include "irtcat/calibration.hpp"
#include "irtcat/cat.hpp"
#include "irtcat/filters.hpp"
#include "irtcat/responders.hpp"
#include "irtcat/response_matrix.hpp"
#include "irtcat/rng.hpp"
#include "irtcat/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCalibration = 3;
constexpr int kExitNoSessions = 4;

void log_line(const std::string& msg) { std::cerr << "irtcat: " << msg << '\n'; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw irtcat::ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw irtcat::ConfigError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw irtcat::ConfigError("short write to '" + path.string() + "'");
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Filesystem-safe session log name; a hash suffix keeps distinct ids
// distinct after character replacement.
std::string sanitize_component(const std::string& id) {
  std::string s;
  s.reserve(id.size());
  for (char ch : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_' ||
                    ch == '-';
    s += ok ? ch : '_';
  }
  if (s.empty() || s[0] == '.') s.insert(s.begin(), 'r');
  if (s != id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "-%08x",
                  static_cast<std::uint32_t>(irtcat::hash_str(id) & 0xffffffffu));
    s += buf;
  }
  return s;
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  json cfg;
  try {
    cfg = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw irtcat::ConfigError("config '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw irtcat::ConfigError("config '" + path + "': expected a JSON object");
  return cfg;
}

// Flags beat the config file, the config file beats defaults.
template <typename T>
void config_fill(const json& cfg, const char* key, const CLI::Option* opt, T* out) {
  if (opt != nullptr && opt->count() > 0) return;
  auto it = cfg.find(key);
  if (it == cfg.end()) return;
  try {
    *out = it->get<T>();
  } catch (const json::type_error&) {
    throw irtcat::ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

irtcat::InfoForm parse_info_form(const std::string& s) {
  if (s == "logistic") return irtcat::InfoForm::logistic;
  if (s == "exact3pl") return irtcat::InfoForm::exact3pl;
  throw irtcat::ConfigError("info form must be 'logistic' or 'exact3pl', got '" + s + "'");
}

irtcat::SessionStatus status_from_string(const std::string& s) {
  if (s == "active") return irtcat::SessionStatus::active;
  if (s == "converged") return irtcat::SessionStatus::converged;
  if (s == "exhausted_max") return irtcat::SessionStatus::exhausted_max;
  if (s == "bank_exhausted") return irtcat::SessionStatus::bank_exhausted;
  throw irtcat::ParseError("unknown session status '" + s + "'");
}

double parse_strict_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw irtcat::ParseError(what + ": cannot parse number '" + s + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// model_id,theta[,...]; extra columns ignored
std::map<std::string, double> read_refs_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw irtcat::ParseError(path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "model_id" || header[1] != "theta")
    throw irtcat::ParseError(path + ": expected header 'model_id,theta[,...]'");
  std::map<std::string, double> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 2)
      throw irtcat::ParseError(path + ": row " + std::to_string(row) + " has too few columns");
    if (!out.emplace(cells[0], parse_strict_double(cells[1], path)).second)
      throw irtcat::ParseError(path + ": duplicate model_id '" + cells[0] + "'");
  }
  return out;
}

std::vector<std::string> parse_id_list(const std::string& comma_list,
                                       const std::string& file_path) {
  std::vector<std::string> ids;
  if (!comma_list.empty()) {
    std::string cur;
    for (char ch : comma_list) {
      if (ch == ',') {
        if (!cur.empty()) ids.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) ids.push_back(cur);
  }
  if (!file_path.empty()) {
    std::istringstream in(read_file(file_path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) ids.push_back(line);
    }
  }
  return ids;
}

// ---------------------------------------------------------------- outputs

std::string refs_csv(const std::map<std::string, irtcat::AbilityEstimate>& refs) {
  std::string out = "model_id,theta,se\n";
  for (const auto& [id, est] : refs)
    out += id + "," + fmt_double(est.theta) + "," + fmt_double(est.se) + "\n";
  return out;
}

// Writes sessions/<id>.jsonl for every session plus summary.json; returns
// the number of sessions that finished without a responder failure.
int write_batch_outputs(const fs::path& out_dir, const irtcat::BatchResult& batch) {
  fs::create_directories(out_dir / "sessions");
  std::vector<std::string> rel_paths;
  rel_paths.reserve(batch.sessions.size());
  for (const auto& res : batch.sessions) {
    const std::string rel = "sessions/" + sanitize_component(res.respondent_id) + ".jsonl";
    write_file(out_dir / rel, irtcat::session_log_jsonl(res));
    rel_paths.push_back(rel);
  }

  ordered_json manifest;
  manifest["schema_version"] = irtcat::kSchemaVersion;
  manifest["tool_version"] = irtcat::kToolVersion;
  for (const auto& [key, value] : batch.manifest.items()) {
    if (key == "schema_version") continue;
    manifest[key] = value;
  }
  auto& sess = manifest["sessions"];
  for (std::size_t i = 0; i < rel_paths.size(); ++i) sess[i]["log"] = rel_paths[i];
  write_file(out_dir / "summary.json", manifest.dump(2) + "\n");

  int completed = 0;
  for (const auto& res : batch.sessions)
    if (res.completed()) ++completed;
  return completed;
}

// ------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string matrix_path;
  std::string config_path;
  std::string out_dir;
  irtcat::FilterConfig fc;
};

int cmd_preprocess(const PreprocessArgs& a) {
  const irtcat::ResponseMatrix m = irtcat::load_matrix(a.matrix_path);
  auto [filtered, report] = irtcat::preprocess(m, a.fc);
  fs::create_directories(a.out_dir);
  write_file(fs::path(a.out_dir) / "filtered.csv", irtcat::matrix_to_csv(filtered));
  write_file(fs::path(a.out_dir) / "filter_report.json", irtcat::report_to_json(report));
  log_line("models " + std::to_string(report.input_models) + " -> " +
           std::to_string(report.retained_models) + ", items " +
           std::to_string(report.input_items) + " -> " + std::to_string(report.retained_items));
  return kExitOk;
}

// -------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string matrix_path;
  std::string config_path;
  std::string out_dir;
  bool run_preprocess = false;
  irtcat::FilterConfig fc;
  irtcat::CalibrationConfig cc;
};

ordered_json calibration_report(const irtcat::CalibrationResult& res,
                                const irtcat::ResponseMatrix& m) {
  ordered_json rep;
  rep["schema_version"] = irtcat::kSchemaVersion;
  rep["tool_version"] = irtcat::kToolVersion;
  rep["n_models"] = m.n_models();
  rep["n_items"] = m.n_items();
  rep["n_partitions"] = res.fits.size();
  rep["undersized_partition"] = res.undersized_partition;
  rep["all_converged"] = res.all_converged;
  rep["scale"] = {{"mean", res.bank.scale_mean()}, {"sd", res.bank.scale_sd()}};

  auto parts = ordered_json::array();
  for (std::size_t k = 0; k < res.fits.size(); ++k) {
    const auto& fit = res.fits[k];
    ordered_json p;
    p["partition"] = k + 1;
    p["n_items"] = fit.params.size();
    p["converged"] = fit.converged;
    p["iterations"] = fit.iterations;
    if (!fit.objective_trace.empty()) p["final_objective"] = fit.objective_trace.back();
    if (!fit.loglik_trace.empty()) p["final_loglik"] = fit.loglik_trace.back();
    p["n_degenerate"] = fit.degenerate_items.size();
    p["link"] = {{"A", res.links[k].A}, {"B", res.links[k].B}};
    parts.push_back(std::move(p));
  }
  rep["partitions"] = std::move(parts);

  auto filtered = ordered_json::array();
  for (const auto& item : res.bank.items())
    if (item.filtered) filtered.push_back(item.id);
  rep["filtered_items"] = std::move(filtered);
  return rep;
}

int cmd_calibrate(const CalibrateArgs& a) {
  irtcat::ResponseMatrix m;
  std::optional<irtcat::FilterReport> freport;
  try {
    if (a.cc.partition_min_size < 100)
      throw irtcat::ConfigError("partition minimum size must be at least 100");
    if (a.cc.max_em_iterations < 1) throw irtcat::ConfigError("iteration cap must be positive");
    if (!(a.cc.em_tolerance > 0.0)) throw irtcat::ConfigError("tolerance must be positive");
    m = irtcat::load_matrix(a.matrix_path);
    if (a.run_preprocess) {
      auto [fm, fr] = irtcat::preprocess(m, a.fc);
      m = std::move(fm);
      freport = std::move(fr);
      log_line("preprocess kept " + std::to_string(m.n_models()) + " models, " +
               std::to_string(m.n_items()) + " items");
    }
  } catch (const irtcat::Error& e) {
    log_line(std::string("error: ") + e.what());
    return kExitValidation;
  }

  try {
    irtcat::CalibrationResult res = irtcat::calibrate_bank(m, a.cc);

    for (std::size_t k = 0; k < res.fits.size(); ++k) {
      if (res.fits[k].converged) continue;
      log_line("warning: partition " + std::to_string(k + 1) + " hit the iteration cap");
      for (int i = 0; i < res.bank.size(); ++i) {
        irtcat::BankItem& item = res.bank.item(i);
        if (item.partition != static_cast<int>(k + 1)) continue;
        if (!item.notes.empty()) item.notes += "; ";
        item.notes += "unconverged calibration";
      }
    }

    fs::create_directories(a.out_dir);
    irtcat::save_bank(res.bank, (fs::path(a.out_dir) / "bank.json").string());
    write_file(fs::path(a.out_dir) / "refs.csv", refs_csv(res.reference_thetas));
    write_file(fs::path(a.out_dir) / "calibration_report.json",
               calibration_report(res, m).dump(2) + "\n");
    if (freport)
      write_file(fs::path(a.out_dir) / "filter_report.json", irtcat::report_to_json(*freport));

    const int n_oper = static_cast<int>(res.bank.operational().size());
    log_line("bank: " + std::to_string(res.bank.size()) + " items, " + std::to_string(n_oper) +
             " operational, " + std::to_string(res.fits.size()) + " partition(s)");
    if (res.undersized_partition) log_line("warning: single undersized partition");
    return kExitOk;
  } catch (const std::exception& e) {
    log_line(std::string("calibration failed: ") + e.what());
    return kExitCalibration;
  }
}

// -------------------------------------------------------------------- run

struct RunArgs {
  std::string bank_path;
  std::string matrix_path;
  std::string command;
  std::string respondents_list;
  std::string respondents_file;
  std::string meta_path;
  std::string out_dir;
  double timeout_seconds = 120.0;
  irtcat::CatConfig cat;
};

int cmd_run(const RunArgs& a) {
  const irtcat::ItemBank bank = irtcat::load_bank(a.bank_path);
  if (a.matrix_path.empty() == a.command.empty())
    throw irtcat::ConfigError("exactly one of --matrix or --command is required");

  std::optional<irtcat::ResponseMatrix> matrix;
  std::vector<std::string> ids = parse_id_list(a.respondents_list, a.respondents_file);
  std::vector<irtcat::Respondent> respondents;

  if (!a.matrix_path.empty()) {
    matrix = irtcat::load_matrix(a.matrix_path);
    if (ids.empty()) ids = matrix->model_ids();
    for (const auto& id : ids) {
      if (matrix->model_index(id) < 0)
        throw irtcat::ConfigError("respondent '" + id + "' is not in the matrix");
      respondents.push_back({id, irtcat::matrix_responder(*matrix, id)});
    }
  } else {
    if (ids.empty())
      throw irtcat::ConfigError("--command needs --respondents or --respondents-file");
    json meta = json::object();
    if (!a.meta_path.empty()) {
      meta = json::parse(read_file(a.meta_path), nullptr, true);
      if (!meta.is_object())
        throw irtcat::ConfigError("--meta file must hold a JSON object");
    }
    for (const auto& id : ids) {
      irtcat::ExternalOptions opt;
      opt.timeout_seconds = a.timeout_seconds;
      opt.meta = meta;
      respondents.push_back({id, irtcat::external_responder(a.command, opt)});
    }
  }

  const irtcat::BatchResult batch = irtcat::batch_run(bank, a.cat, respondents);
  const int completed = write_batch_outputs(a.out_dir, batch);
  for (const auto& res : batch.sessions)
    if (!res.error.empty())
      log_line("session '" + res.respondent_id + "' failed: " + res.error);
  log_line(std::to_string(completed) + "/" + std::to_string(batch.sessions.size()) +
           " sessions completed");
  return completed > 0 ? kExitOk : kExitNoSessions;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string bank_path;
  std::string out_dir;
  int n = 0;
  double mean = 0.0;
  double sd = 1.0;
  irtcat::CatConfig cat;
};

std::vector<double> sample_normal(int n, double mean, double sd, std::uint64_t key) {
  irtcat::CounterRng rng(key);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  double spare = 0.0;
  bool have_spare = false;
  while (static_cast<int>(out.size()) < n) {
    if (have_spare) {
      out.push_back(mean + sd * spare);
      have_spare = false;
      continue;
    }
    const double u1 = 1.0 - rng.next_double();  // (0, 1]
    const double u2 = rng.next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    out.push_back(mean + sd * (r * std::cos(phi)));
    spare = r * std::sin(phi);
    have_spare = true;
  }
  return out;
}

int cmd_simulate(const SimulateArgs& a) {
  const irtcat::ItemBank bank = irtcat::load_bank(a.bank_path);
  if (a.n < 0) throw irtcat::ConfigError("--n must be nonnegative");
  if (!(a.sd >= 0.0)) throw irtcat::ConfigError("--sd must be nonnegative");

  const std::vector<double> thetas =
      sample_normal(a.n, a.mean, a.sd, irtcat::CounterRng::derive_key(a.cat.rng_seed, "sim/theta"));

  int width = 1;
  for (int v = a.n; v >= 10; v /= 10) ++width;
  width = std::clamp(width, 4, 10);
  std::vector<irtcat::Respondent> respondents;
  std::map<std::string, double> truth;
  for (int i = 0; i < a.n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sim-%0*d", width, i + 1);
    const std::string id = buf;
    truth[id] = thetas[static_cast<std::size_t>(i)];
    respondents.push_back(
        {id, irtcat::simulated_responder(
                 thetas[static_cast<std::size_t>(i)], bank,
                 irtcat::CounterRng::derive_key(a.cat.rng_seed, "resp/" + id))});
  }

  const irtcat::BatchResult batch = irtcat::batch_run(bank, a.cat, respondents);
  const int completed = write_batch_outputs(a.out_dir, batch);

  std::string truth_csv = "respondent_id,theta_true\n";
  for (const auto& [id, th] : truth) truth_csv += id + "," + fmt_double(th) + "\n";
  write_file(fs::path(a.out_dir) / "true_thetas.csv", truth_csv);

  const irtcat::BatchSummary summary = irtcat::summarize_batch(batch.sessions, bank);
  ordered_json rec;
  rec["n_requested"] = a.n;
  rec["n_sessions"] = summary.sessions.size();
  if (!summary.sessions.empty()) {
    std::map<std::string, double> est;
    double items_sum = 0.0;
    int converged = 0;
    for (const auto& s : summary.sessions) {
      est[s.respondent_id] = s.theta;
      items_sum += s.n_items;
      if (s.status == irtcat::SessionStatus::converged) ++converged;
    }
    std::map<std::string, double> ref;
    for (const auto& [id, th] : est) ref[id] = truth.at(id);
    rec["mae"] = irtcat::mae(est, ref);
    rec["stop_rate"] = static_cast<double>(converged) /
                       static_cast<double>(summary.sessions.size());
    rec["avg_items"] = items_sum / static_cast<double>(summary.sessions.size());
    const irtcat::ExposureReport exp = irtcat::exposure_rates(summary);
    rec["exposure"] = {{"avg", exp.average}, {"max", exp.max}};
    if (summary.sessions.size() >= 2)
      rec["overlap"] = {{"chen", irtcat::overlap_chen(summary)},
                        {"jaccard", irtcat::overlap_jaccard(summary)}};
  }
  write_file(fs::path(a.out_dir) / "recovery.json", rec.dump(2) + "\n");

  if (a.n == 0) {
    log_line("no respondents requested; wrote empty outputs");
    return kExitOk;
  }
  log_line(std::to_string(completed) + "/" + std::to_string(a.n) + " sessions completed");
  return completed > 0 ? kExitOk : kExitNoSessions;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string run_dir;
  std::string references_path;
  std::string out_path;
  int rank_threshold = 10;
};

irtcat::SessionSummary parse_session_log(const std::string& path) {
  irtcat::SessionSummary s;
  std::istringstream in(read_file(path));
  std::string line;
  bool saw_terminal = false;
  int correct = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw irtcat::ParseError(path + ": " + e.what());
    }
    if (j.contains("status")) {
      s.status = status_from_string(j.at("status").get<std::string>());
      s.theta = j.at("theta").is_null() ? 0.0 : j.at("theta").get<double>();
      s.se = j.at("se").is_null() ? std::numeric_limits<double>::infinity()
                                  : j.at("se").get<double>();
      s.n_items = j.at("n_items").get<int>();
      if (j.contains("error")) s.status = irtcat::SessionStatus::active;
      saw_terminal = true;
    } else {
      s.items.push_back(j.at("item_id").get<std::string>());
      correct += j.at("response").get<int>();
    }
  }
  if (!saw_terminal) throw irtcat::ParseError(path + ": missing terminal status line");
  s.accuracy = s.items.empty() ? 0.0
                               : static_cast<double>(correct) /
                                     static_cast<double>(s.items.size());
  return s;
}

int cmd_metrics(const MetricsArgs& a) {
  irtcat::BatchSummary batch;
  const fs::path run_dir(a.run_dir);
  const fs::path summary_path = run_dir / "summary.json";

  if (fs::exists(summary_path)) {
    json manifest = json::parse(read_file(summary_path.string()));
    for (const auto& id : manifest.at("bank").at("operational_item_ids"))
      batch.bank_items.push_back(id.get<std::string>());
    for (const auto& entry : manifest.at("sessions")) {
      if (entry.contains("error")) continue;
      irtcat::SessionSummary s =
          parse_session_log((run_dir / entry.at("log").get<std::string>()).string());
      s.respondent_id = entry.at("respondent_id").get<std::string>();
      if (s.status == irtcat::SessionStatus::active) continue;
      batch.sessions.push_back(std::move(s));
    }
  } else {
    // bare directory of logs; the administered union stands in for the bank
    log_line("warning: no summary.json under '" + a.run_dir +
             "'; exposure uses only administered items");
    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(run_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
        logs.push_back(entry.path());
    std::sort(logs.begin(), logs.end());
    std::set<std::string> item_union;
    for (const auto& p : logs) {
      irtcat::SessionSummary s = parse_session_log(p.string());
      s.respondent_id = p.stem().string();
      if (s.status == irtcat::SessionStatus::active) continue;
      for (const auto& id : s.items) item_union.insert(id);
      batch.sessions.push_back(std::move(s));
    }
    batch.bank_items.assign(item_union.begin(), item_union.end());
  }

  std::optional<std::map<std::string, double>> refs;
  if (!a.references_path.empty()) refs = read_refs_csv(a.references_path);

  const ordered_json report =
      irtcat::metrics_report(batch, refs ? &*refs : nullptr, a.rank_threshold);
  const fs::path out =
      a.out_path.empty() ? run_dir / "metrics.json" : fs::path(a.out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file(out, report.dump(2) + "\n");

  std::string headline = "sessions " + std::to_string(batch.sessions.size());
  if (report.contains("mae")) headline += ", mae " + fmt_double(report["mae"].get<double>());
  if (report.contains("avg_items"))
    headline += ", avg items " + fmt_double(report["avg_items"].get<double>());
  log_line(headline);
  return kExitOk;
}

// ------------------------------------------------------------------- main

void add_cat_flags(CLI::App* cmd, irtcat::CatConfig* cat, std::string* info_form,
                   std::map<std::string, CLI::Option*>* opts) {
  (*opts)["se_threshold"] =
      cmd->add_option("--se-threshold", cat->se_threshold, "stopping standard error");
  (*opts)["min_items"] = cmd->add_option("--min-items", cat->min_items, "minimum items");
  (*opts)["max_items"] = cmd->add_option("--max-items", cat->max_items, "maximum items");
  (*opts)["top_k"] =
      cmd->add_option("--top-k", cat->top_k, "randomesque candidate pool size");
  (*opts)["info_form"] =
      cmd->add_option("--info-form", *info_form, "item information: logistic or exact3pl");
  (*opts)["seed"] = cmd->add_option("--seed", cat->rng_seed, "master random seed");
}

void fill_cat_flags(const json& cfg, const std::map<std::string, CLI::Option*>& opts,
                    irtcat::CatConfig* cat, std::string* info_form) {
  config_fill(cfg, "se_threshold", opts.at("se_threshold"), &cat->se_threshold);
  config_fill(cfg, "min_items", opts.at("min_items"), &cat->min_items);
  config_fill(cfg, "max_items", opts.at("max_items"), &cat->max_items);
  config_fill(cfg, "top_k", opts.at("top_k"), &cat->top_k);
  config_fill(cfg, "info_form", opts.at("info_form"), info_form);
  config_fill(cfg, "seed", opts.at("seed"), &cat->rng_seed);
  cat->info_form = parse_info_form(*info_form);
  if (!(cat->se_threshold > 0.0)) throw irtcat::ConfigError("se threshold must be positive");
  if (cat->min_items < 1 || cat->max_items < cat->min_items)
    throw irtcat::ConfigError("need 1 <= min items <= max items");
  if (cat->top_k < 1) throw irtcat::ConfigError("top-k must be positive");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"item bank calibration and adaptive test sessions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("irtcat ") + irtcat::kToolVersion + " (schema " +
                                        irtcat::kSchemaVersion + ")");

  // preprocess
  PreprocessArgs pre;
  auto* cmd_pre = app.add_subcommand("preprocess", "filter models and items in a response matrix");
  cmd_pre->add_option("--matrix", pre.matrix_path, "response matrix CSV")->required();
  cmd_pre->add_option("--config", pre.config_path, "JSON config file");
  cmd_pre->add_option("--out", pre.out_dir, "output directory")->required();
  auto* o_pf = cmd_pre->add_option("--percentile-floor", pre.fc.percentile_floor,
                                   "drop this fraction of lowest-scoring models");
  auto* o_sd = cmd_pre->add_option("--sd-floor", pre.fc.sd_floor, "minimum item score SD");
  auto* o_ac =
      cmd_pre->add_option("--acc-ceiling", pre.fc.acc_ceiling, "maximum item accuracy");
  auto* o_rpb =
      cmd_pre->add_option("--rpb-floor", pre.fc.rpb_floor, "minimum point-biserial");

  // calibrate
  CalibrateArgs cal;
  auto* cmd_cal = app.add_subcommand("calibrate", "estimate item parameters and build a bank");
  cmd_cal->add_option("--matrix", cal.matrix_path, "response matrix CSV")->required();
  cmd_cal->add_option("--config", cal.config_path, "JSON config file");
  cmd_cal->add_option("--out", cal.out_dir, "output directory")->required();
  auto* o_prep = cmd_cal->add_flag("--preprocess", cal.run_preprocess,
                                   "run the model/item filters before calibrating");
  auto* o_pms = cmd_cal->add_option("--partition-min-size", cal.cc.partition_min_size,
                                    "minimum items per calibration partition");
  auto* o_emi = cmd_cal->add_option("--max-iterations", cal.cc.max_em_iterations,
                                    "iteration cap for the fit");
  auto* o_emt =
      cmd_cal->add_option("--tolerance", cal.cc.em_tolerance, "parameter change tolerance");
  bool cal_no_prior = false;
  auto* o_ncp = cmd_cal->add_flag("--no-c-prior", cal_no_prior,
                                  "drop the regularizing prior on the guessing parameter");
  auto* o_cpf = cmd_cal->add_option("--percentile-floor", cal.fc.percentile_floor,
                                    "with --preprocess: model floor fraction");
  auto* o_csd = cmd_cal->add_option("--sd-floor", cal.fc.sd_floor,
                                    "with --preprocess: minimum item score SD");
  auto* o_cac = cmd_cal->add_option("--acc-ceiling", cal.fc.acc_ceiling,
                                    "with --preprocess: maximum item accuracy");
  auto* o_crpb = cmd_cal->add_option("--rpb-floor", cal.fc.rpb_floor,
                                     "with --preprocess: minimum point-biserial");

  // run
  RunArgs run;
  std::string run_info_form = "logistic";
  auto* cmd_run_ = app.add_subcommand("run", "administer adaptive sessions");
  std::string run_config_path;
  cmd_run_->add_option("--bank", run.bank_path, "calibrated bank JSON")->required();
  cmd_run_->add_option("--config", run_config_path, "JSON config file");
  cmd_run_->add_option("--matrix", run.matrix_path, "replay responses from this matrix CSV");
  cmd_run_->add_option("--command", run.command, "external scorer shell command");
  cmd_run_->add_option("--respondents", run.respondents_list, "comma-separated respondent ids");
  cmd_run_->add_option("--respondents-file", run.respondents_file,
                       "file with one respondent id per line");
  cmd_run_->add_option("--meta", run.meta_path,
                       "JSON object mapping item id to content forwarded to the scorer");
  auto* o_rto =
      cmd_run_->add_option("--timeout", run.timeout_seconds, "external scorer timeout, seconds");
  cmd_run_->add_option("--out", run.out_dir, "output directory")->required();
  std::map<std::string, CLI::Option*> run_cat_opts;
  add_cat_flags(cmd_run_, &run.cat, &run_info_form, &run_cat_opts);

  // simulate
  SimulateArgs sim;
  std::string sim_info_form = "logistic";
  std::string sim_config_path;
  auto* cmd_sim = app.add_subcommand("simulate", "run sessions for a synthetic population");
  cmd_sim->add_option("--bank", sim.bank_path, "calibrated bank JSON")->required();
  cmd_sim->add_option("--config", sim_config_path, "JSON config file");
  auto* o_sn = cmd_sim->add_option("--n", sim.n, "population size")->required();
  auto* o_sm = cmd_sim->add_option("--mean", sim.mean, "ability population mean");
  auto* o_ss = cmd_sim->add_option("--sd", sim.sd, "ability population SD");
  cmd_sim->add_option("--out", sim.out_dir, "output directory")->required();
  std::map<std::string, CLI::Option*> sim_cat_opts;
  add_cat_flags(cmd_sim, &sim.cat, &sim_info_form, &sim_cat_opts);

  // metrics
  MetricsArgs met;
  std::string met_config_path;
  auto* cmd_met = app.add_subcommand("metrics", "aggregate metrics over stored session logs");
  cmd_met->add_option("--run-dir", met.run_dir, "directory written by run or simulate")
      ->required();
  cmd_met->add_option("--config", met_config_path, "JSON config file");
  cmd_met->add_option("--references", met.references_path,
                      "reference thetas CSV (model_id,theta,...)");
  cmd_met->add_option("--out", met.out_path, "metrics JSON path (default <run-dir>/metrics.json)");
  auto* o_mrt = cmd_met->add_option("--rank-threshold", met.rank_threshold,
                                    "rank shift reporting threshold, positions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (cmd_pre->parsed()) {
      const json cfg = load_config_file(pre.config_path);
      config_fill(cfg, "percentile_floor", o_pf, &pre.fc.percentile_floor);
      config_fill(cfg, "sd_floor", o_sd, &pre.fc.sd_floor);
      config_fill(cfg, "acc_ceiling", o_ac, &pre.fc.acc_ceiling);
      config_fill(cfg, "rpb_floor", o_rpb, &pre.fc.rpb_floor);
      return cmd_preprocess(pre);
    }
    if (cmd_cal->parsed()) {
      const json cfg = load_config_file(cal.config_path);
      config_fill(cfg, "preprocess", o_prep, &cal.run_preprocess);
      config_fill(cfg, "percentile_floor", o_cpf, &cal.fc.percentile_floor);
      config_fill(cfg, "sd_floor", o_csd, &cal.fc.sd_floor);
      config_fill(cfg, "acc_ceiling", o_cac, &cal.fc.acc_ceiling);
      config_fill(cfg, "rpb_floor", o_crpb, &cal.fc.rpb_floor);
      config_fill(cfg, "partition_min_size", o_pms, &cal.cc.partition_min_size);
      config_fill(cfg, "max_em_iterations", o_emi, &cal.cc.max_em_iterations);
      config_fill(cfg, "em_tolerance", o_emt, &cal.cc.em_tolerance);
      bool use_prior = !cal_no_prior;
      config_fill(cfg, "c_prior", o_ncp, &use_prior);
      if (o_ncp->count() > 0) use_prior = !cal_no_prior;
      if (!use_prior) cal.cc.c_prior.reset();
      return cmd_calibrate(cal);
    }
    if (cmd_run_->parsed()) {
      const json cfg = load_config_file(run_config_path);
      fill_cat_flags(cfg, run_cat_opts, &run.cat, &run_info_form);
      config_fill(cfg, "timeout_seconds", o_rto, &run.timeout_seconds);
      return cmd_run(run);
    }
    if (cmd_sim->parsed()) {
      const json cfg = load_config_file(sim_config_path);
      fill_cat_flags(cfg, sim_cat_opts, &sim.cat, &sim_info_form);
      config_fill(cfg, "n", o_sn, &sim.n);
      config_fill(cfg, "mean", o_sm, &sim.mean);
      config_fill(cfg, "sd", o_ss, &sim.sd);
      return cmd_simulate(sim);
    }
    if (cmd_met->parsed()) {
      const json cfg = load_config_file(met_config_path);
      config_fill(cfg, "rank_threshold", o_mrt, &met.rank_threshold);
      return cmd_metrics(met);
    }
  } catch (const irtcat::Error& e) {
    log_line(std::string("error: ") + e.what());
    return kExitValidation;
  } catch (const json::exception& e) {
    log_line(std::string("error: ") + e.what());
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    log_line(std::string("error: ") + e.what());
    return kExitValidation;
  }
  return kExitValidation;
}
