#include <algorithm>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bioagents/ingest.h"
#include "bioagents/text.h"

namespace bioagents::ingest {

using gateway::ChatMessage;
using gateway::Role;
using nlohmann::json;

namespace {

std::size_t record_tokens(const std::vector<ChatMessage>& messages) {
  std::size_t words = 0;
  for (const auto& m : messages) words += split_whitespace(m.content).size();
  return (words * 13 + 9) / 10;
}

// Fits the last (assistant) message under `cap`, cutting at a whitespace
// boundary. Returns false when not even one assistant token fits.
bool fit_to_cap(FinetuneRecord& record, std::size_t cap) {
  record.token_estimate = record_tokens(record.messages);
  if (record.token_estimate <= cap) return true;

  std::size_t prefix_words = 0;
  for (std::size_t i = 0; i + 1 < record.messages.size(); ++i) {
    prefix_words += split_whitespace(record.messages[i].content).size();
  }
  auto& content = record.messages.back().content;
  auto words = split_whitespace(content);
  std::size_t keep = 0;
  while (keep < words.size() && ((prefix_words + keep + 1) * 13 + 9) / 10 <= cap) ++keep;
  if (keep == 0) return false;
  const auto& last = words[keep - 1];
  const std::size_t end = static_cast<std::size_t>(last.data() - content.data()) + last.size();
  content.resize(end);
  record.truncated = true;
  record.token_estimate = record_tokens(record.messages);
  return true;
}

}  // namespace

Dataset build_finetune_dataset(const std::vector<ToolRecord>& tools,
                               const std::vector<ontology::OntologyTerm>& terms,
                               const DatasetOptions& options) {
  Dataset out;
  if (options.cap == 0) throw Error(ErrorCode::kInvalidArgument, "token cap must be > 0");
  if (tools.empty() && terms.empty()) {
    spdlog::warn("dataset: no tools and no terms; emitting an empty dataset");
    return out;
  }

  auto push = [&](std::string user, std::string assistant) {
    FinetuneRecord r;
    if (!options.system_prompt.empty()) {
      r.messages.push_back({Role::kSystem, options.system_prompt});
    }
    r.messages.push_back({Role::kUser, std::move(user)});
    r.messages.push_back({Role::kAssistant, std::move(assistant)});
    if (!fit_to_cap(r, options.cap)) {
      spdlog::warn("dataset: prompt alone exceeds cap {}; record skipped", options.cap);
      ++out.skipped;
      return;
    }
    if (r.truncated) ++out.truncated;
    out.records.push_back(std::move(r));
  };

  std::vector<const ToolRecord*> ordered;
  for (const auto& t : tools) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(), [](const ToolRecord* a, const ToolRecord* b) {
    if (a->rank != b->rank) return a->rank < b->rank;
    return a->name < b->name;
  });
  for (const ToolRecord* tool : ordered) {
    for (const auto& version : tool->versions) {
      auto doc = std::find_if(tool->help_docs.begin(), tool->help_docs.end(),
                              [&](const HelpDoc& d) { return d.version == version; });
      if (doc == tool->help_docs.end() || is_blank(doc->text)) continue;
      push("How do I use " + tool->name + " version " + version +
               "? Show its command-line help.",
           doc->text);
    }
  }

  std::vector<const ontology::OntologyTerm*> sorted_terms;
  for (const auto& t : terms) sorted_terms.push_back(&t);
  std::stable_sort(sorted_terms.begin(), sorted_terms.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });
  for (const auto* term : sorted_terms) {
    if (term->definition_missing || is_blank(term->definition)) {
      ++out.skipped;
      continue;
    }
    push("What is " + term->name + " and what is it used for?",
         term->name + ": " + term->definition);
  }
  return out;
}

std::string to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& r : dataset.records) {
    json msgs = json::array();
    for (const auto& m : r.messages) {
      msgs.push_back({{"role", gateway::to_string(m.role)}, {"content", m.content}});
    }
    out += json{{"messages", msgs}}.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

}  // namespace bioagents::ingest
