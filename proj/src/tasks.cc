#include "bioagents/eval/tasks.h"

#include "bioagents/error.h"

namespace bioagents::eval {

const char* to_string(TaskLevel level) {
  switch (level) {
    case TaskLevel::kEasy: return "easy";
    case TaskLevel::kMedium: return "medium";
    case TaskLevel::kHard: return "hard";
  }
  return "easy";
}

const char* to_string(TaskKind kind) { return kind == TaskKind::kConcept ? "concept" : "code"; }

TaskLevel level_from_string(const std::string& s) {
  if (s == "easy") return TaskLevel::kEasy;
  if (s == "medium") return TaskLevel::kMedium;
  if (s == "hard") return TaskLevel::kHard;
  throw Error(ErrorCode::kInvalidArgument, "unknown task level '" + s + "'");
}

TaskKind kind_from_string(const std::string& s) {
  if (s == "concept") return TaskKind::kConcept;
  if (s == "code") return TaskKind::kCode;
  throw Error(ErrorCode::kInvalidArgument, "unknown task kind '" + s + "'");
}

const std::vector<TaskSpec>& builtin_tasks() {
  static const std::vector<TaskSpec> tasks = {
      {TaskLevel::kEasy, TaskKind::kConcept,
       "How would I provide quality metrics on FASTQ files?"},
      {TaskLevel::kEasy, TaskKind::kCode,
       "What code or workflow do I need to write to provide quality metrics on FASTQ files?"},
      {TaskLevel::kMedium, TaskKind::kConcept,
       "How do I align RNA-seq data against a human reference genome?"},
      {TaskLevel::kMedium, TaskKind::kCode,
       "What code or workflow do I need to write to align RNA-seq data against a human "
       "reference genome?"},
      {TaskLevel::kHard, TaskKind::kConcept,
       "How can I assemble, annotate, and analyze SARS-CoV-2 genomes from sequencing data to "
       "identify and characterize different variants of the virus?"},
      {TaskLevel::kHard, TaskKind::kCode,
       "What code or workflow do I need to write to assemble, annotate, and analyze SARS-CoV-2 "
       "genomes from sequencing data to identify and characterize different variants of the "
       "virus?"},
  };
  return tasks;
}

}  // namespace bioagents::eval
