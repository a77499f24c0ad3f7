#pragma once

#include <string>
#include <vector>

#include "bioagents/orchestrator.h"

namespace bioagents::app {

// One canonical JSON file per run, `<root>/<id>.json`. Ids start with a
// fixed-width UTC timestamp that is strictly increasing within the process,
// followed by a random suffix, so lexical order is creation order. Files are
// written to a temp name and hard-linked into place, never overwritten.
class TraceStore {
 public:
  explicit TraceStore(std::string root);

  // Assigns trace.trace_id and returns it.
  std::string store(orchestrator::OrchestrationTrace trace);
  // Throws Error(kNotFound) for unknown or malformed ids.
  orchestrator::OrchestrationTrace load(const std::string& id) const;
  std::vector<std::string> list() const;

  const std::string& root() const { return root_; }

  static std::string new_id();
  static bool valid_id(const std::string& id);

 private:
  std::string root_;
};

}  // namespace bioagents::app
