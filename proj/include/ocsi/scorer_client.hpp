#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocsi/error.hpp"
#include "ocsi/matcher_bridge.hpp"

namespace ocsi {

enum class ScorerErrc {
  connection,
  handshake,
  malformed_response,
  unknown_pair_id,
  missing_pair_id,
  duplicate_pair_id,
  confidence_out_of_range,
  missing_response,
  empty_request,
};

const char* to_string(ScorerErrc code);

class ScorerError : public Error {
 public:
  ScorerError(ScorerErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ScorerErrc code() const noexcept { return code_; }

 private:
  ScorerErrc code_;
};

// "cmd:<shell command>" or "tcp:<host>:<port>".
struct ScorerEndpoint {
  enum class Transport { command, tcp };

  Transport transport = Transport::command;
  std::string command;
  std::string host;
  std::string port;

  static ScorerEndpoint parse(std::string_view spec);
};

struct ScorerOptions {
  int max_attempts = 3;
  std::chrono::milliseconds timeout{30000};
};

// One HeavyScore per pair, returned in request order. Connection failures are
// retried by resending only unanswered pairs; protocol violations abort.
std::vector<HeavyScore> score_routed(std::span<const SerializedPair> pairs, const ScorerEndpoint& endpoint,
                                     const ScorerOptions& options = {});

}  // namespace ocsi
