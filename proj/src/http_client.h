#pragma once

// Minimal JSON-over-HTTP POST shared by the chat-completions judge and the
// remote embedder. Internal to the library.

#include <chrono>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace slatejudge::internal {

struct HttpReply {
  int status = 0;
  std::string body;
};

struct PostOptions {
  std::chrono::milliseconds timeout{30000};
  std::optional<std::string> bearer_token;
};

// POST `body` to base_url + path. Returns nullopt on connection failure or
// timeout; `error` then describes the failure.
std::optional<HttpReply> post_json(const std::string& base_url,
                                   const std::string& path,
                                   const nlohmann::json& body,
                                   const PostOptions& options,
                                   std::string* error);

// Value of the named environment variable. Throws AuthError when unset.
std::optional<std::string> bearer_from_env(const std::string& env_name);

}  // namespace slatejudge::internal
