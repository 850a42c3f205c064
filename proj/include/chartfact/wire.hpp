#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace chartfact::wire {

// Protocol spoken with the model service:
//   POST /v1/entail       {image_uri | table_linearized, prompt}  -> {logit_yes, logit_no, version}
//   POST /v1/chart2table  {image_uri}                              -> {title, table_linearized, version}
//   POST /v1/rectify      {title, table_linearized, caption, template_id} -> {raw_response, version}
//   GET  /v1/health
inline constexpr std::string_view kEntailRoute = "entail";
inline constexpr std::string_view kChart2TableRoute = "chart2table";
inline constexpr std::string_view kRectifyRoute = "rectify";

// Compact JSON with sorted keys; the hashing and fixture layout depend on
// this exact byte form.
std::string canonical(const nlohmann::json& body);

// Lowercase hex SHA-256 of "<route>\n<canonical body>".
std::string content_hash(std::string_view route, const nlohmann::json& body);

std::string sha256_hex(std::string_view data);

// Location of a recorded response: <dir>/<route>/<content_hash>.json
std::filesystem::path fixture_path(const std::filesystem::path& dir, std::string_view route,
                                   const nlohmann::json& body);

// Reads a recorded response; throws Errc::BackendUnavailable when absent
// or unparsable.
nlohmann::json read_fixture(const std::filesystem::path& dir, std::string_view route,
                            const nlohmann::json& body);

// Writes `response` where read_fixture will look for it.
void write_fixture(const std::filesystem::path& dir, std::string_view route,
                   const nlohmann::json& body, const nlohmann::json& response);

struct ClientOptions {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::seconds timeout{30};
};

// Blocking JSON-over-HTTP client for one service base URL
// ("http://host:port" with an optional path prefix).
class Client {
 public:
  explicit Client(std::string base_url, ClientOptions options = {});

  // POSTs to /v1/<route>. Transport failures and 5xx responses are retried
  // with exponential backoff; 4xx, unparsable bodies and responses without a
  // "version" field fail immediately. Failures throw Errc::BackendUnavailable.
  nlohmann::json post(std::string_view route, const nlohmann::json& body) const;

  bool healthy() const;

  const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::string base_url_;
  std::string origin_;
  std::string prefix_;
  ClientOptions options_;
};

}  // namespace chartfact::wire
