#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bioagents/eval/tasks.h"

namespace bioagents::eval {

enum class Subject { kSystem, kExpert };

const char* to_string(Subject subject);
Subject subject_from_string(const std::string& s);

struct RubricScore {
  TaskLevel level;
  TaskKind kind;
  Subject subject;
  std::string rater_id;
  int accuracy = 0;
  int completeness = 0;
};

// Throws Error(kOutOfRange) unless both scores are within 1..5.
void validate(const RubricScore& score);

// Header: task_level,task_kind,subject,rater_id,accuracy,completeness
// Rejects out-of-range scores with the offending line number.
std::vector<RubricScore> parse_rubric_csv(std::string_view csv);

struct RubricCell {
  TaskLevel level;
  TaskKind kind;
  Subject subject;
  std::size_t n = 0;
  double mean_accuracy = 0.0;
  double mean_completeness = 0.0;
};

// Only populated cells are returned, ordered by (level, kind, subject).
std::vector<RubricCell> aggregate_rubric(const std::vector<RubricScore>& scores);

// Full level x kind x subject grid; absent cells print as "-".
std::string render_rubric(const std::vector<RubricCell>& cells);

}  // namespace bioagents::eval
