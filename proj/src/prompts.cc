#include "bioagents/prompts.h"

#include <filesystem>

#include "bioagents/error.h"
#include "bioagents/text.h"

namespace bioagents::orchestrator {

PromptTemplate parse_prompt_template(const std::string& text) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = std::string_view(text).substr(pos, nl == std::string::npos ? text.npos : nl - pos);
    if (trim(line) == "---") {
      PromptTemplate t;
      t.system = std::string(trim(std::string_view(text).substr(0, pos)));
      t.user = nl == std::string::npos ? std::string{}
                                       : std::string(trim(std::string_view(text).substr(nl + 1)));
      if (t.user.empty()) throw Error(ErrorCode::kParse, "prompt template has an empty user part");
      return t;
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  throw Error(ErrorCode::kParse, "prompt template lacks a '---' separator line");
}

PromptSet load_prompts(const std::string& dir) {
  namespace fs = std::filesystem;
  auto load = [&](const char* file) {
    auto path = (fs::path(dir) / file).string();
    try {
      return parse_prompt_template(read_file(path));
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
  };
  PromptSet set;
  set.name = fs::path(dir).lexically_normal().string();
  set.tool_agent = load("tool_agent.txt");
  set.workflow_agent = load("workflow_agent.txt");
  set.reasoning_agent = load("reasoning_agent.txt");
  set.self_rate = load("self_rate.txt");
  return set;
}

const PromptSet& default_prompts() {
  static const PromptSet set = load_prompts(BIOAGENTS_PROMPT_DIR);
  return set;
}

std::vector<gateway::ChatMessage> render(
    const PromptTemplate& tmpl,
    const std::vector<std::pair<std::string, std::string>>& values) {
  std::vector<gateway::ChatMessage> messages;
  if (!tmpl.system.empty()) {
    messages.push_back({gateway::Role::kSystem, render_template(tmpl.system, values)});
  }
  messages.push_back({gateway::Role::kUser, render_template(tmpl.user, values)});
  return messages;
}

}  // namespace bioagents::orchestrator
