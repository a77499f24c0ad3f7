#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bioagents/error.h"
#include "bioagents/ingest.h"
#include "bioagents/text.h"

namespace bioagents::ingest {

using nlohmann::json;

namespace {

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw std::invalid_argument("id must be a string or integer");
}

QARecord parse_record(const json& j, int min_upvotes, std::size_t* dropped_answers) {
  if (!j.is_object()) throw std::invalid_argument("line is not a JSON object");
  QARecord r;
  r.id = id_string(j.at("id"));
  if (r.id.empty()) throw std::invalid_argument("empty id");
  r.title = j.at("title").get<std::string>();
  r.body = j.value("body", "");
  std::set<std::string> seen;
  if (auto tags = j.find("tags"); tags != j.end() && !tags->is_null()) {
    for (const auto& t : *tags) {
      auto tag = to_lower(trim(t.get<std::string>()));
      if (!tag.empty() && seen.insert(tag).second) r.tags.push_back(tag);
    }
  }
  for (const auto& a : j.at("answers")) {
    AnswerRecord ans;
    ans.text = a.at("text").get<std::string>();
    ans.upvotes = a.value("upvotes", 0);
    ans.accepted = a.value("accepted", false);
    if (ans.upvotes < 0) throw std::invalid_argument("negative upvotes");
    if (ans.upvotes >= min_upvotes) {
      r.answers.push_back(std::move(ans));
    } else {
      ++*dropped_answers;
    }
  }
  if (auto c = j.find("created_at"); c != j.end() && c->is_string()) {
    r.created_at = c->get<std::string>();
  }
  return r;
}

}  // namespace

BiostarsLoad parse_biostars(std::string_view jsonl, const BiostarsOptions& options) {
  BiostarsLoad out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    auto line = jsonl.substr(pos, nl == std::string_view::npos ? jsonl.npos : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (is_blank(line)) continue;
    std::string problem;
    try {
      auto j = json::parse(line);
      std::size_t dropped = 0;
      auto record = parse_record(j, options.min_upvotes, &dropped);
      if (!ids.insert(record.id).second) {
        problem = "duplicate id " + record.id;
      } else {
        out.dropped_answers += dropped;
        if (record.answers.empty()) {
          ++out.dropped_questions;
        } else {
          out.records.push_back(std::move(record));
        }
        continue;
      }
    } catch (const std::exception& e) {
      problem = e.what();
    }
    if (options.strict) {
      throw Error(ErrorCode::kParse,
                  "malformed record at line " + std::to_string(line_no) + ": " + problem);
    }
    spdlog::warn("biostars: skipping line {}: {}", line_no, problem);
    ++out.malformed_lines;
  }
  return out;
}

BiostarsLoad load_biostars(const std::string& path, const BiostarsOptions& options) {
  return parse_biostars(read_file(path), options);
}

std::string to_json_line(const QARecord& record) {
  json j;
  j["id"] = record.id;
  j["title"] = record.title;
  j["body"] = record.body;
  j["tags"] = record.tags;
  json answers = json::array();
  for (const auto& a : record.answers) {
    answers.push_back({{"text", a.text}, {"upvotes", a.upvotes}, {"accepted", a.accepted}});
  }
  j["answers"] = std::move(answers);
  if (record.created_at) j["created_at"] = *record.created_at;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

const AnswerRecord& reference_answer(const QARecord& record) {
  if (record.answers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "question " + record.id + " has no answers");
  }
  const AnswerRecord* best = &record.answers.front();
  for (const auto& a : record.answers) {
    if (a.upvotes > best->upvotes || (a.upvotes == best->upvotes && a.accepted && !best->accepted)) {
      best = &a;
    }
  }
  return *best;
}

// -- categorization ----------------------------------------------------------

const char* to_string(TagCategory category) {
  switch (category) {
    case TagCategory::kTool: return "tool";
    case TagCategory::kAnalysis: return "analysis";
    case TagCategory::kDataFormat: return "data_format";
    case TagCategory::kProgramming: return "programming";
    case TagCategory::kOther: return "other";
  }
  return "other";
}

TagCategory parse_category(std::string_view reply) {
  std::string word;
  for (char c : to_lower(trim(reply))) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word.push_back(c);
    } else if (c == '_' || c == '-' || c == ' ') {
      word.push_back('_');
    }
  }
  while (!word.empty() && word.back() == '_') word.pop_back();
  while (!word.empty() && word.front() == '_') word.erase(word.begin());
  if (word == "tool") return TagCategory::kTool;
  if (word == "analysis") return TagCategory::kAnalysis;
  if (word == "data_format" || word == "dataformat") return TagCategory::kDataFormat;
  if (word == "programming") return TagCategory::kProgramming;
  return TagCategory::kOther;
}

std::vector<gateway::ChatMessage> categorization_prompt(const std::string& tag) {
  using gateway::ChatMessage;
  using gateway::Role;
  return {
      ChatMessage{Role::kSystem,
                  "You classify tags from a bioinformatics question-and-answer forum into exactly "
                  "one of five categories:\n"
                  "tool - software programs and packages used for bioinformatics analysis;\n"
                  "analysis - pipelines and analysis performed in bioinformatics field, such as "
                  "rna-seq, alignment, variant calling;\n"
                  "data_format - genomics and other -omics data formats;\n"
                  "programming - programming languages, including wdl, nextflow and snakemake, "
                  "and operation systems;\n"
                  "other - for everything else.\n"
                  "Answer with one word: tool, analysis, data_format, programming or other."},
      ChatMessage{Role::kUser, "Tag: " + tag},
  };
}

TagCategorizer::TagCategorizer(gateway::ChatBackend& backend, int retries, gateway::GenConfig gen)
    : backend_(backend), retries_(retries), gen_(std::move(gen)) {}

TagAssignment TagCategorizer::classify(const std::string& tag) {
  auto prompt = categorization_prompt(tag);
  for (int attempt = 0; attempt <= retries_; ++attempt) {
    try {
      {
        std::lock_guard lock(mu_);
        ++calls_;
      }
      auto reply = backend_.complete(prompt, gen_);
      return TagAssignment{tag, parse_category(reply), false};
    } catch (const Error& e) {
      spdlog::warn("categorize '{}': attempt {} failed: {}", tag, attempt + 1, e.what());
    }
  }
  return TagAssignment{tag, TagCategory::kOther, true};
}

std::vector<TagAssignment> TagCategorizer::categorize(const std::vector<std::string>& tags) {
  std::vector<TagAssignment> out;
  out.reserve(tags.size());
  for (const auto& raw : tags) {
    auto tag = to_lower(trim(raw));
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(tag); it != cache_.end()) {
        out.push_back(it->second);
        continue;
      }
    }
    auto assignment = classify(tag);
    std::lock_guard lock(mu_);
    out.push_back(cache_.emplace(tag, assignment).first->second);
  }
  return out;
}

std::size_t TagCategorizer::backend_calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<TagAssignment> categorize_tags(const std::vector<std::string>& tags,
                                           gateway::ChatBackend& backend) {
  TagCategorizer categorizer(backend);
  return categorizer.categorize(tags);
}

}  // namespace bioagents::ingest
