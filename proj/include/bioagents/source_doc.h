#pragma once

#include <string>

namespace bioagents {

// A document destined for the retrieval index.
struct SourceDoc {
  std::string id;
  std::string title;
  std::string text;
  std::string origin;
  // Corpus label copied into each chunk's metadata (e.g. "nfcore", "ontology").
  std::string corpus;

  bool operator==(const SourceDoc&) const = default;
};

}  // namespace bioagents
