#include "slatejudge/persistence.h"

#include <fcntl.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"

namespace slatejudge {
namespace {

using nlohmann::json;

json payload_of(const CacheEntry& e) {
  return json{{"raw_response", e.raw_response},
              {"verdict", e.verdict},
              {"timestamp", e.timestamp}};
}

std::string canonical(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

void check_key(std::string_view key) {
  if (!is_hex_digest(key)) {
    throw InvalidArgument("cache key must be 64 lowercase hex characters");
  }
}

std::atomic<unsigned long> tmp_counter{0};

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path ResponseCache::path_for(std::string_view key) const {
  check_key(key);
  return dir_ / std::string(key.substr(0, 2)) / (std::string(key) + ".json");
}

std::optional<CacheEntry> ResponseCache::get(std::string_view key) const {
  const auto path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    const json stored = json::parse(buf.str());
    CacheEntry entry;
    entry.raw_response = stored.at("raw_response").get<std::string>();
    entry.verdict = stored.at("verdict");
    entry.timestamp = stored.at("timestamp").get<std::string>();
    if (stored.at("checksum").get<std::string>() != sha256_hex(canonical(payload_of(entry)))) {
      throw std::runtime_error("checksum mismatch");
    }
    return entry;
  } catch (const std::exception& e) {
    ++corrupt_;
    spdlog::warn("corrupt cache entry {} ({}); treating as absent", path.string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(std::string_view key, const CacheEntry& entry) const {
  const auto path = path_for(key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());

  json stored = payload_of(entry);
  stored["checksum"] = sha256_hex(canonical(payload_of(entry)));
  const std::string bytes = canonical(stored) + "\n";

  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << ::getpid() << "."
           << std::this_thread::get_id() << "." << tmp_counter++;
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot write cache entry " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot publish cache entry " + path.string());
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void append_ledger(const std::filesystem::path& ledger_path,
                   const RunLedgerEntry& e) {
  if (e.planned != e.cached + e.queried) {
    throw InvalidArgument("ledger counts must satisfy planned = cached + queried");
  }
  const json line = {{"run_id", e.run_id},         {"config_digest", e.config_digest},
                     {"planned", e.planned},       {"cached", e.cached},
                     {"queried", e.queried},       {"abstained", e.abstained},
                     {"started_at", e.started_at}, {"finished_at", e.finished_at}};
  const std::string bytes = line.dump() + "\n";
  if (ledger_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(ledger_path.parent_path(), ec);
  }
  const int fd = ::open(ledger_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw IoError("cannot open ledger " + ledger_path.string());
  const ssize_t written = ::write(fd, bytes.data(), bytes.size());
  ::close(fd);
  if (written != static_cast<ssize_t>(bytes.size())) {
    throw IoError("short write to ledger " + ledger_path.string());
  }
}

}  // namespace slatejudge
