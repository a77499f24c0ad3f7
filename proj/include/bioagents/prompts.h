#pragma once

#include <string>
#include <vector>

#include "bioagents/gateway.h"

namespace bioagents::orchestrator {

// A template file holds the system prompt, a line containing only `---`, and
// the user message template.
struct PromptTemplate {
  std::string system;
  std::string user;
};

PromptTemplate parse_prompt_template(const std::string& text);

struct PromptSet {
  std::string name;
  PromptTemplate tool_agent;
  PromptTemplate workflow_agent;
  PromptTemplate reasoning_agent;
  PromptTemplate self_rate;
};

// Reads tool_agent.txt, workflow_agent.txt, reasoning_agent.txt and
// self_rate.txt from `dir`.
PromptSet load_prompts(const std::string& dir);

// The set shipped in the repository's prompts/ directory.
const PromptSet& default_prompts();

std::vector<gateway::ChatMessage> render(
    const PromptTemplate& tmpl,
    const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace bioagents::orchestrator
