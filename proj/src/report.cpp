#include "kurv/report.hpp"

#include <cstdio>
#include <ctime>

namespace kurv::report {

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[24];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string canonical_form(const ReportEnvelope& env) {
  const json j = {{"schema_version", env.schema_version},
                  {"command", env.command},
                  {"params", env.params},
                  {"seeds", env.seeds},
                  {"payload", env.payload},
                  {"exit_status", env.exit_status}};
  return j.dump();
}

void finalize(ReportEnvelope& env) {
  if (env.timestamp.empty()) env.timestamp = iso8601_utc_now();
  env.determinism_hash = fnv1a64_hex(canonical_form(env));
}

void to_json(json& j, const ReportEnvelope& env) {
  j = json{{"schema_version", env.schema_version},
           {"command", env.command},
           {"params", env.params},
           {"seeds", env.seeds},
           {"timestamp", env.timestamp},
           {"elapsed_seconds", env.elapsed_seconds},
           {"payload", env.payload},
           {"exit_status", env.exit_status},
           {"determinism_hash", env.determinism_hash}};
}

void from_json(const json& j, ReportEnvelope& env) {
  j.at("schema_version").get_to(env.schema_version);
  j.at("command").get_to(env.command);
  env.params = j.at("params");
  j.at("seeds").get_to(env.seeds);
  j.at("timestamp").get_to(env.timestamp);
  j.at("elapsed_seconds").get_to(env.elapsed_seconds);
  env.payload = j.at("payload");
  j.at("exit_status").get_to(env.exit_status);
  j.at("determinism_hash").get_to(env.determinism_hash);
}

}  // namespace kurv::report
