#include "http_client.h"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "slatejudge/errors.h"

namespace slatejudge::internal {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path part without trailing slash
};

SplitUrl split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  const auto path_start =
      base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.prefix = base_url.substr(path_start);
  }
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

}  // namespace

std::optional<HttpReply> post_json(const std::string& base_url,
                                   const std::string& path,
                                   const nlohmann::json& body,
                                   const PostOptions& options,
                                   std::string* error) {
  const SplitUrl url = split_url(base_url);
  httplib::Client client(url.origin);
  if (!client.is_valid()) {
    if (error) *error = "invalid base_url '" + base_url + "'";
    return std::nullopt;
  }
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      options.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (options.bearer_token) {
    headers.emplace("Authorization", "Bearer " + *options.bearer_token);
  }
  auto res = client.Post(url.prefix + path, headers, body.dump(),
                         "application/json");
  if (!res) {
    if (error) *error = httplib::to_string(res.error());
    return std::nullopt;
  }
  return HttpReply{res->status, res->body};
}

std::optional<std::string> bearer_from_env(const std::string& env_name) {
  if (env_name.empty()) return std::nullopt;
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr || *value == '\0') {
    throw AuthError("API key variable " + env_name + " is not set");
  }
  return std::string(value);
}

}  // namespace slatejudge::internal
