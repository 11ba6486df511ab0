#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace irtcat {

// Which expression is used for per-item Fisher information.  The default
// treats a^2 * p * (1-p) as the information of a 3PL item; exact3pl applies
// the guessing-corrected form a^2 * ((1-p)/p) * ((p-c)/(1-c))^2.
enum class InfoForm { logistic, exact3pl };

enum class Estimator { eap, wle };

struct ItemParameters {
  double a = 1.0;  // discrimination
  double b = 0.0;  // difficulty, logit scale
  double c = 0.0;  // lower asymptote in [0,1)
};

struct QuadratureGrid {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, sum to 1
};

// Equally spaced nodes with standard normal weights, renormalized to sum 1.
QuadratureGrid make_normal_grid(int n_nodes = 81, double lo = -6.0, double hi = 6.0);
const QuadratureGrid& default_grid();

struct AbilityEstimate {
  double theta = 0.0;
  double se = std::numeric_limits<double>::infinity();
  Estimator estimator = Estimator::eap;
  int items_used = 0;
  // WLE only: the objective was still one-sided at the search bracket edge,
  // so theta sits on the boundary rather than at an interior root.
  bool saturated = false;
};

struct TestRecord {
  struct Entry {
    std::string item_id;
    int response = 0;  // 0 or 1
  };
  struct TrajectoryPoint {
    double theta = 0.0;
    double se = std::numeric_limits<double>::infinity();
  };
  std::vector<Entry> entries;
  std::vector<TrajectoryPoint> trajectory;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files or payloads.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid option values, impossible requests, bad parameter ranges.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Session misuse: responding to an item that was never selected, duplicates.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Two keyed collections that must share keys do not.
class PairingError : public Error {
 public:
  using Error::Error;
};

// Quantities that exist only for non-degenerate input: zero-variance
// correlations, empty posteriors, zero-spread linking.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Unknown item or model identifier.
class LookupError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage removed everything: empty population or empty bank.
class EmptyError : public Error {
 public:
  using Error::Error;
};

// A responder failed to produce a usable answer.
class ResponderError : public Error {
 public:
  using Error::Error;
};

inline void check_item_parameters(const ItemParameters& p, const std::string& where) {
  if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.c))
    throw ConfigError(where + ": item parameters must be finite");
  if (p.c < 0.0 || p.c >= 1.0)
    throw ConfigError(where + ": guessing parameter must lie in [0,1)");
}

}  // namespace irtcat
