#include "bioagents/eval/rubric.h"

#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "bioagents/error.h"
#include "bioagents/text.h"

namespace bioagents::eval {

const char* to_string(Subject subject) {
  return subject == Subject::kSystem ? "system" : "expert";
}

Subject subject_from_string(const std::string& s) {
  if (s == "system") return Subject::kSystem;
  if (s == "expert") return Subject::kExpert;
  throw Error(ErrorCode::kInvalidArgument, "unknown subject '" + s + "'");
}

void validate(const RubricScore& score) {
  auto in_range = [](int v) { return v >= 1 && v <= 5; };
  if (!in_range(score.accuracy) || !in_range(score.completeness)) {
    throw Error(ErrorCode::kOutOfRange, "rubric scores must be within 1..5 (got accuracy " +
                                            std::to_string(score.accuracy) + ", completeness " +
                                            std::to_string(score.completeness) + ")");
  }
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  for (auto& f : fields) f = std::string(trim(f));
  return fields;
}

int parse_int(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": not an integer: '" + s + "'");
  }
}

}  // namespace

std::vector<RubricScore> parse_rubric_csv(std::string_view csv) {
  static const std::vector<std::string> kHeader = {"task_level", "task_kind", "subject",
                                                   "rater_id",   "accuracy",  "completeness"};
  std::vector<RubricScore> out;
  std::size_t pos = 0, line_no = 0;
  bool header_seen = false;
  while (pos < csv.size()) {
    auto nl = csv.find('\n', pos);
    auto line = csv.substr(pos, nl == std::string_view::npos ? csv.npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() : nl + 1;
    ++line_no;
    if (is_blank(line)) continue;
    auto fields = split_csv_line(line);
    if (!header_seen) {
      if (fields != kHeader) throw Error(ErrorCode::kParse, "unexpected rubric CSV header");
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 6 fields");
    }
    RubricScore s;
    try {
      s.level = level_from_string(fields[0]);
      s.kind = kind_from_string(fields[1]);
      s.subject = subject_from_string(fields[2]);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    s.rater_id = fields[3];
    s.accuracy = parse_int(fields[4], line_no);
    s.completeness = parse_int(fields[5], line_no);
    try {
      validate(s);
    } catch (const Error& e) {
      throw Error(ErrorCode::kOutOfRange, "line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RubricCell> aggregate_rubric(const std::vector<RubricScore>& scores) {
  using Key = std::tuple<TaskLevel, TaskKind, Subject>;
  std::map<Key, RubricCell> cells;
  for (const auto& s : scores) {
    validate(s);
    auto& cell = cells[{s.level, s.kind, s.subject}];
    cell.level = s.level;
    cell.kind = s.kind;
    cell.subject = s.subject;
    ++cell.n;
    cell.mean_accuracy += s.accuracy;
    cell.mean_completeness += s.completeness;
  }
  std::vector<RubricCell> out;
  for (auto& [key, cell] : cells) {
    cell.mean_accuracy /= static_cast<double>(cell.n);
    cell.mean_completeness /= static_cast<double>(cell.n);
    out.push_back(cell);
  }
  return out;
}

std::string render_rubric(const std::vector<RubricCell>& cells) {
  auto find = [&](TaskLevel l, TaskKind k, Subject s) -> const RubricCell* {
    for (const auto& c : cells) {
      if (c.level == l && c.kind == k && c.subject == s) return &c;
    }
    return nullptr;
  };
  auto fmt = [](const RubricCell* c, bool accuracy) {
    if (!c) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", accuracy ? c->mean_accuracy : c->mean_completeness);
    return std::string(buf);
  };
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-8s %-8s %9s %13s %4s\n", "level", "kind", "subject",
                "accuracy", "completeness", "n");
  out << line;
  for (auto level : {TaskLevel::kEasy, TaskLevel::kMedium, TaskLevel::kHard}) {
    for (auto kind : {TaskKind::kConcept, TaskKind::kCode}) {
      for (auto subject : {Subject::kSystem, Subject::kExpert}) {
        const auto* c = find(level, kind, subject);
        std::snprintf(line, sizeof(line), "%-8s %-8s %-8s %9s %13s %4s\n", to_string(level),
                      to_string(kind), to_string(subject), fmt(c, true).c_str(),
                      fmt(c, false).c_str(), c ? std::to_string(c->n).c_str() : "-");
        out << line;
      }
    }
  }
  return out.str();
}

}  // namespace bioagents::eval
