#pragma once

// Corpus acquisition: Biostars QA dumps, registry tool listings with their
// command-line help, nf-core documentation trees, and the instruct dataset
// built from tools and software-ontology terms.

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bioagents/gateway.h"
#include "bioagents/ontology.h"
#include "bioagents/source_doc.h"

namespace bioagents::ingest {

struct AnswerRecord {
  std::string text;
  int upvotes = 0;
  bool accepted = false;

  bool operator==(const AnswerRecord&) const = default;
};

struct QARecord {
  std::string id;
  std::string title;
  std::string body;
  std::vector<std::string> tags;
  std::vector<AnswerRecord> answers;
  std::optional<std::string> created_at;

  bool operator==(const QARecord&) const = default;
};

struct BiostarsOptions {
  int min_upvotes = 1;
  bool strict = false;
};

struct BiostarsLoad {
  std::vector<QARecord> records;
  std::size_t malformed_lines = 0;
  // Questions excluded because no answer survived the upvote filter.
  std::size_t dropped_questions = 0;
  std::size_t dropped_answers = 0;
};

// Reads one JSON object per line. Malformed lines (bad JSON, missing fields,
// empty or repeated id) abort with the line number in strict mode and are
// counted otherwise.
BiostarsLoad load_biostars(const std::string& path, const BiostarsOptions& options = {});
BiostarsLoad parse_biostars(std::string_view jsonl, const BiostarsOptions& options = {});

std::string to_json_line(const QARecord& record);

// The answer used as the benchmark reference: most upvotes, then accepted,
// then first. Requires at least one answer.
const AnswerRecord& reference_answer(const QARecord& record);

enum class TagCategory { kTool, kAnalysis, kDataFormat, kProgramming, kOther };

const char* to_string(TagCategory category);
// Maps a classifier reply to a category; anything unrecognised is kOther.
TagCategory parse_category(std::string_view reply);

struct TagAssignment {
  std::string tag;
  TagCategory category = TagCategory::kOther;
  // Set when the backend kept failing and the tag fell back to kOther.
  bool flagged = false;
};

std::vector<gateway::ChatMessage> categorization_prompt(const std::string& tag);

// One backend call per distinct tag; results are cached across calls.
class TagCategorizer {
 public:
  explicit TagCategorizer(gateway::ChatBackend& backend, int retries = 2,
                          gateway::GenConfig gen = {});

  std::vector<TagAssignment> categorize(const std::vector<std::string>& tags);

  std::size_t backend_calls() const;

 private:
  TagAssignment classify(const std::string& tag);

  gateway::ChatBackend& backend_;
  int retries_;
  gateway::GenConfig gen_;
  mutable std::mutex mu_;
  std::map<std::string, TagAssignment> cache_;
  std::size_t calls_ = 0;
};

std::vector<TagAssignment> categorize_tags(const std::vector<std::string>& tags,
                                           gateway::ChatBackend& backend);

// -- Tool registry -----------------------------------------------------------

struct HelpDoc {
  std::string tool_name;
  std::string version;
  std::string text;
  std::string source;  // "live-container" or "fixture"

  bool operator==(const HelpDoc&) const = default;
};

struct ToolRecord {
  std::string name;
  int rank = 0;
  long long downloads = 0;
  std::vector<std::string> versions;
  std::vector<HelpDoc> help_docs;

  bool operator==(const ToolRecord&) const = default;
};

struct RegistryTool {
  std::string name;
  long long downloads = 0;
  std::vector<std::string> versions;
};

class ToolRegistry {
 public:
  virtual ~ToolRegistry() = default;
  virtual std::vector<RegistryTool> list_tools() = 0;
};

struct TrsOptions {
  std::string base_url;  // e.g. https://api.biocontainers.pro/ga4gh/trs/v2
  int page_size = 100;
  int retries = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::milliseconds timeout{30000};
};

// GA4GH TRS v2 `GET /tools?limit=&offset=` listing. The next page is taken from
// the `next_page` response header; a repeated cursor raises kLoopDetected.
class TrsRegistry : public ToolRegistry {
 public:
  explicit TrsRegistry(TrsOptions options);
  std::vector<RegistryTool> list_tools() override;

  std::size_t requests() const { return requests_; }

 private:
  TrsOptions options_;
  std::size_t requests_ = 0;
};

// Parses one TRS listing page (a JSON array of tools).
std::vector<RegistryTool> parse_trs_page(const std::string& body);

// Sorted by downloads descending then name ascending; ranks 1..k.
std::vector<ToolRecord> rank_tools(std::vector<RegistryTool> tools, int n);
std::vector<ToolRecord> fetch_top_tools(ToolRegistry& registry, int n);

class HelpProvider {
 public:
  virtual ~HelpProvider() = default;
  // Throws Error(kUnavailable) when the provider cannot run at all. A version
  // the provider cannot render returns an empty string.
  virtual std::string help_text(const std::string& tool, const std::string& version) = 0;
  virtual std::string source_tag() const = 0;
};

// Reads `<root>/<tool>/<version>.txt`.
class FixtureHelpProvider : public HelpProvider {
 public:
  explicit FixtureHelpProvider(std::string root) : root_(std::move(root)) {}
  std::string help_text(const std::string& tool, const std::string& version) override;
  std::string source_tag() const override { return "fixture"; }

 private:
  std::string root_;
};

// Runs `<runtime> run --rm <image_prefix><tool>:<version> <tool> <flag>` with
// --help, then -h, then no flag; the first non-empty stdout+stderr wins.
class ContainerHelpProvider : public HelpProvider {
 public:
  explicit ContainerHelpProvider(std::string runtime = "docker",
                                 std::string image_prefix = "quay.io/biocontainers/");
  std::string help_text(const std::string& tool, const std::string& version) override;
  std::string source_tag() const override { return "live-container"; }

  bool runtime_available() const;

 private:
  std::string runtime_;
  std::string image_prefix_;
};

struct HelpCollection {
  std::vector<HelpDoc> docs;
  std::size_t empty_versions = 0;
  std::vector<std::string> failed_versions;
  bool provider_unavailable = false;
};

HelpCollection collect_help_docs(const ToolRecord& tool, HelpProvider& provider);

nlohmann::json to_json(const ToolRecord& tool);
ToolRecord tool_from_json(const nlohmann::json& j);
std::string serialize_tools(const std::vector<ToolRecord>& tools);
std::vector<ToolRecord> parse_tools(std::string_view text);

// -- nf-core -------------------------------------------------------------------

struct NfcoreIngest {
  std::vector<SourceDoc> docs;
  std::size_t empty_files = 0;
  std::size_t unreadable_files = 0;
};

// Walks `dir` recursively for .md/.markdown/.txt/.yml/.yaml/.nf files; ids are
// '/'-separated paths relative to `dir`, in sorted order.
NfcoreIngest ingest_nfcore(const std::string& dir);

std::string serialize_source_docs(const std::vector<SourceDoc>& docs);
std::vector<SourceDoc> parse_source_docs(std::string_view jsonl);

// -- Fine-tune dataset -----------------------------------------------------------

struct FinetuneRecord {
  std::vector<gateway::ChatMessage> messages;
  std::size_t token_estimate = 0;
  bool truncated = false;
};

struct DatasetOptions {
  std::size_t cap = 1000;
  std::string system_prompt =
      "You are a bioinformatics assistant with expert knowledge of command-line tools.";
};

struct Dataset {
  std::vector<FinetuneRecord> records;
  std::size_t truncated = 0;
  std::size_t skipped = 0;
};

Dataset build_finetune_dataset(const std::vector<ToolRecord>& tools,
                               const std::vector<ontology::OntologyTerm>& terms,
                               const DatasetOptions& options = {});

// One `{"messages":[...]}` object per line.
std::string to_jsonl(const Dataset& dataset);

}  // namespace bioagents::ingest
