#pragma once

#include <string>
#include <vector>

namespace bioagents::eval {

enum class TaskLevel { kEasy, kMedium, kHard };
enum class TaskKind { kConcept, kCode };

const char* to_string(TaskLevel level);
const char* to_string(TaskKind kind);
TaskLevel level_from_string(const std::string& s);
TaskKind kind_from_string(const std::string& s);

struct TaskSpec {
  TaskLevel level;
  TaskKind kind;
  std::string prompt;
};

// The six evaluation questions: three levels, each asked as a conceptual
// question and as a code/workflow request.
const std::vector<TaskSpec>& builtin_tasks();

}  // namespace bioagents::eval
