#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "httplib.h"

namespace bioagents::detail {

struct HttpOutcome {
  int status = 0;
  std::string body;
  httplib::Headers headers;
};

// Runs `attempt` up to 1 + retries times with exponential backoff. Retries on
// transport errors, 429 and 5xx. `counter` is bumped once per attempt.
// Throws Error(kTimeout | kUnavailable | kHttp).
HttpOutcome with_retries(const std::function<httplib::Result()>& attempt,
                         int retries, std::chrono::milliseconds backoff,
                         const std::function<void()>& counter,
                         const std::string& what);

}  // namespace bioagents::detail
