#include "bioagents/http_retry.h"

#include <thread>

#include "bioagents/error.h"

namespace bioagents::detail {

HttpOutcome with_retries(const std::function<httplib::Result()>& attempt,
                         int retries, std::chrono::milliseconds backoff,
                         const std::function<void()>& counter,
                         const std::string& what) {
  std::string last_error;
  ErrorCode last_code = ErrorCode::kUnavailable;
  for (int i = 0; i <= retries; ++i) {
    if (i > 0) std::this_thread::sleep_for(backoff * (1 << (i - 1)));
    if (counter) counter();
    httplib::Result res = attempt();
    if (!res) {
      auto err = res.error();
      last_code = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                      ? ErrorCode::kTimeout
                      : ErrorCode::kUnavailable;
      last_error = what + ": " + httplib::to_string(err);
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      return HttpOutcome{res->status, res->body, res->headers};
    }
    last_code = ErrorCode::kHttp;
    last_error = what + ": HTTP " + std::to_string(res->status) + ": " + res->body;
    if (res->status != 429 && res->status < 500) break;
  }
  throw Error(last_code, last_error);
}

}  // namespace bioagents::detail
