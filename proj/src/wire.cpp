#include "chartfact/wire.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "chartfact/error.hpp"

namespace chartfact::wire {

std::string canonical(const nlohmann::json& body) { return body.dump(); }

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::InvalidArgument, "SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string content_hash(std::string_view route, const nlohmann::json& body) {
  std::string data(route);
  data.push_back('\n');
  data += canonical(body);
  return sha256_hex(data);
}

std::filesystem::path fixture_path(const std::filesystem::path& dir, std::string_view route,
                                   const nlohmann::json& body) {
  return dir / std::string(route) / (content_hash(route, body) + ".json");
}

nlohmann::json read_fixture(const std::filesystem::path& dir, std::string_view route,
                            const nlohmann::json& body) {
  const auto path = fixture_path(dir, route, body);
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Errc::BackendUnavailable, "no recorded " + std::string(route) +
                                              " response at " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BackendUnavailable, "unparsable fixture " + path.string() + ": " + e.what());
  }
}

void write_fixture(const std::filesystem::path& dir, std::string_view route,
                   const nlohmann::json& body, const nlohmann::json& response) {
  const auto path = fixture_path(dir, route, body);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write fixture " + path.string());
  out << response.dump() << '\n';
}

Client::Client(std::string base_url, ClientOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  const auto scheme = base_url_.find("://");
  const auto path_start =
      base_url_.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  origin_ = base_url_.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : base_url_.substr(path_start);
  if (origin_.rfind("http://", 0) != 0)
    throw Error(Errc::InvalidArgument, "remote backend URL must start with http://: " + base_url_);
}

nlohmann::json Client::post(std::string_view route, const nlohmann::json& body) const {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(options_.timeout);
  cli.set_read_timeout(options_.timeout);
  const std::string path = prefix_ + "/v1/" + std::string(route);
  const std::string payload = canonical(body);

  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= std::max(1, options_.attempts); ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = cli.Post(path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200)
      throw Error(Errc::BackendUnavailable, base_url_ + path + " rejected request (HTTP " +
                                                std::to_string(res->status) + "): " + res->body);
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::BackendUnavailable, base_url_ + path + " returned invalid JSON: " + e.what());
    }
    if (!parsed.is_object() || !parsed.contains("version"))
      throw Error(Errc::BackendUnavailable, base_url_ + path + " response lacks a version field");
    return parsed;
  }
  throw Error(Errc::BackendUnavailable, base_url_ + path + " failed after " +
                                            std::to_string(options_.attempts) +
                                            " attempts: " + last_error);
}

bool Client::healthy() const {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(options_.timeout);
  auto res = cli.Get(prefix_ + "/v1/health");
  return res && res->status == 200;
}

}  // namespace chartfact::wire
