#pragma once

#include <cstdint>
#include <string>

#include "irtcat/bank.hpp"
#include "irtcat/cat.hpp"
#include "irtcat/response_matrix.hpp"
#include "json.hpp"

namespace irtcat {

// Replays a stored response row.  The matrix must outlive the responder.
// Items absent from the matrix (or stored as missing) abort the session.
Responder matrix_responder(const ResponseMatrix& matrix, const std::string& model_id);

// Bernoulli draws from the item characteristic curve at theta_true, using
// a seeded counter stream.  The bank must outlive the responder.
Responder simulated_responder(double theta_true, const ItemBank& bank, std::uint64_t seed);

struct ExternalOptions {
  double timeout_seconds = 120.0;
  // optional item_id -> metadata object forwarded verbatim in each request
  nlohmann::json meta = nlohmann::json::object();
};

// Bridges to an external scorer.  Per item the command is run through the
// shell with one request line on stdin:
//   {"item_id": "...", "meta": {...}}
// and must answer with one line {"correct": 0} or {"correct": 1} on stdout
// within the timeout.
Responder external_responder(const std::string& command, ExternalOptions options = {});

}  // namespace irtcat
