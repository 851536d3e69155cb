#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kurv::report {

using json = nlohmann::json;

// Wrapper around every artifact the command-line tool emits.  The
// determinism hash only covers the reproducible fields — timestamp and
// elapsed time are volatile — so the same command with the same seed yields
// the same hash regardless of when or how fast it ran.
struct ReportEnvelope {
  int schema_version = 1;
  std::string command;
  json params = json::object();  // full effective flag echo
  std::vector<std::uint64_t> seeds;
  std::string timestamp;  // ISO 8601 UTC, volatile
  double elapsed_seconds = 0.0;  // volatile
  json payload = json::object();
  int exit_status = 0;
  std::string determinism_hash;  // FNV-1a 64 over canonical_form()
};

// Sorted-key single-line dump of the reproducible fields.
std::string canonical_form(const ReportEnvelope& env);

std::string fnv1a64_hex(std::string_view bytes);

std::string iso8601_utc_now();

// Stamps determinism_hash, and the timestamp when still empty.
void finalize(ReportEnvelope& env);

void to_json(json& j, const ReportEnvelope& env);
void from_json(const json& j, ReportEnvelope& env);

}  // namespace kurv::report
