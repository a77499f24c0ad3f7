#include "bioagents/app/trace_store.h"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>

#include "bioagents/error.h"
#include "bioagents/text.h"

namespace bioagents::app {

namespace fs = std::filesystem;

namespace {

std::int64_t next_timestamp_ns() {
  static std::atomic<std::int64_t> last{0};
  const std::int64_t now = std::chrono::duration_cast<std::chrono::nanoseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
  std::int64_t prev = last.load();
  std::int64_t next;
  do {
    next = std::max(now, prev + 1);
  } while (!last.compare_exchange_weak(prev, next));
  return next;
}

}  // namespace

TraceStore::TraceStore(std::string root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (!fs::is_directory(root_)) {
    throw Error(ErrorCode::kIo, "trace store root is not a directory: " + root_);
  }
}

std::string TraceStore::new_id() {
  const std::int64_t ns = next_timestamp_ns();
  const std::time_t secs = static_cast<std::time_t>(ns / 1'000'000'000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%S", &tm);
  thread_local std::mt19937_64 rng{std::random_device{}()};
  char id[80];
  std::snprintf(id, sizeof(id), "%s.%09lldZ-%08llx", stamp,
                static_cast<long long>(ns % 1'000'000'000),
                static_cast<unsigned long long>(rng() & 0xffffffffULL));
  return id;
}

bool TraceStore::valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64 || id.find("..") != std::string::npos) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

std::string TraceStore::store(orchestrator::OrchestrationTrace trace) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    trace.trace_id = new_id();
    const auto target = fs::path(root_) / (trace.trace_id + ".json");
    const auto tmp = fs::path(root_) / ("." + trace.trace_id + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
      out << orchestrator::serialize_trace(trace);
      if (!out.flush()) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
    // link(2) refuses to replace an existing file.
    const int rc = ::link(tmp.c_str(), target.c_str());
    std::error_code ec;
    fs::remove(tmp, ec);
    if (rc == 0) return trace.trace_id;
    if (errno != EEXIST) throw Error(ErrorCode::kIo, "cannot publish trace " + target.string());
  }
  throw Error(ErrorCode::kIo, "could not allocate a unique trace id");
}

orchestrator::OrchestrationTrace TraceStore::load(const std::string& id) const {
  if (!valid_id(id)) throw Error(ErrorCode::kNotFound, "no trace '" + id + "'");
  const auto path = fs::path(root_) / (id + ".json");
  if (!fs::exists(path)) throw Error(ErrorCode::kNotFound, "no trace '" + id + "'");
  return orchestrator::parse_trace(read_file(path.string()));
}

std::vector<std::string> TraceStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.starts_with(".") || entry.path().extension() != ".json") continue;
    ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace bioagents::app
