#include "bioagents/ontology.h"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "bioagents/error.h"
#include "bioagents/text.h"

namespace bioagents::ontology {

using nlohmann::json;

namespace {

// Reads a quoted OBO string starting at value[0] == '"'. Returns the unescaped
// payload; `rest` receives whatever follows the closing quote.
std::string read_quoted(std::string_view value, std::string_view* rest) {
  std::string out;
  std::size_t i = 1;
  for (; i < value.size(); ++i) {
    char c = value[i];
    if (c == '\\' && i + 1 < value.size()) {
      char next = value[++i];
      switch (next) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: out.push_back(next); break;
      }
      continue;
    }
    if (c == '"') break;
    out.push_back(c);
  }
  if (rest) *rest = i < value.size() ? value.substr(i + 1) : std::string_view{};
  return out;
}

std::string strip_trailing_xref(std::string_view value) {
  value = trim(value);
  if (!value.empty() && value.back() == ']') {
    auto open = value.rfind('[');
    if (open != std::string_view::npos) value = trim(value.substr(0, open));
  }
  return std::string(value);
}

// "X:1 ! comment {modifier}" -> "X:1"
std::string clean_identifier(std::string_view value) {
  auto bang = value.find(" !");
  if (bang != std::string_view::npos) value = value.substr(0, bang);
  auto brace = value.find(" {");
  if (brace != std::string_view::npos) value = value.substr(0, brace);
  return std::string(trim(value));
}

struct Stanza {
  std::size_t line = 0;
  std::string id;
  std::string name;
  std::string definition;
  bool has_definition = false;
  bool obsolete = false;
};

void admit(ParseResult& result, std::set<std::string>& seen, OntologyTerm term,
           const ParseOptions& options, std::size_t line) {
  if (!seen.insert(term.id).second) {
    if (options.strict) {
      throw Error(ErrorCode::kParse,
                  "duplicate id " + term.id + " at line " + std::to_string(line));
    }
    ++result.skipped;
    return;
  }
  result.terms.push_back(std::move(term));
}

void finish_stanza(const Stanza& s, const ParseOptions& options, ParseResult& result,
                   std::set<std::string>& seen) {
  if (s.id.empty() || s.name.empty()) {
    if (options.strict) {
      throw Error(ErrorCode::kParse, "[Term] stanza at line " + std::to_string(s.line) +
                                         " lacks " + (s.id.empty() ? "id" : "name"));
    }
    ++result.skipped;
    return;
  }
  if (s.obsolete && !options.keep_obsolete) {
    ++result.obsolete;
    return;
  }
  OntologyTerm term;
  term.id = s.id;
  term.name = s.name;
  term.definition = s.definition;
  term.definition_missing = !s.has_definition || s.definition.empty();
  term.source = TermSource::kObo;
  term.ontology_name = options.ontology_name;
  admit(result, seen, std::move(term), options, s.line);
}

std::string string_or_empty(const json& node, const char* key) {
  auto it = node.find(key);
  if (it == node.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

std::string json_description(const json& node) {
  if (auto it = node.find("meta"); it != node.end() && it->is_object()) {
    if (auto def = it->find("definition"); def != it->end() && def->is_object()) {
      auto val = string_or_empty(*def, "val");
      if (!val.empty()) return val;
    }
    auto desc = string_or_empty(*it, "description");
    if (!desc.empty()) return desc;
    if (auto bpv = it->find("basicPropertyValues"); bpv != it->end() && bpv->is_array()) {
      for (const auto& p : *bpv) {
        auto pred = to_lower(string_or_empty(p, "pred"));
        if (pred.find("description") != std::string::npos ||
            pred.find("definition") != std::string::npos) {
          auto val = string_or_empty(p, "val");
          if (!val.empty()) return val;
        }
      }
    }
  }
  return string_or_empty(node, "description");
}

bool json_deprecated(const json& node) {
  auto it = node.find("meta");
  if (it == node.end() || !it->is_object()) return false;
  auto dep = it->find("deprecated");
  return dep != it->end() && dep->is_boolean() && dep->get<bool>();
}

}  // namespace

std::string normalize_id(std::string_view id) {
  constexpr std::string_view kPurl = "http://purl.obolibrary.org/obo/";
  id = trim(id);
  if (id.substr(0, kPurl.size()) == kPurl) {
    std::string local(id.substr(kPurl.size()));
    auto us = local.find('_');
    if (us != std::string::npos) local[us] = ':';
    return local;
  }
  constexpr std::string_view kEdam = "http://edamontology.org/";
  if (id.substr(0, kEdam.size()) == kEdam) {
    std::string local(id.substr(kEdam.size()));
    auto us = local.rfind('_');
    if (us != std::string::npos) local[us] = ':';
    return local;
  }
  return std::string(id);
}

ParseResult parse_obo(std::string_view text, const ParseOptions& options) {
  ParseResult result;
  std::set<std::string> seen;
  std::optional<Stanza> current;
  bool in_term = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto close = [&] {
    if (in_term && current) finish_stanza(*current, options, result, seen);
    current.reset();
    in_term = false;
  };

  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto t = trim(line);
    if (t.empty() || t.front() == '!') continue;
    if (t.front() == '[' && t.back() == ']') {
      close();
      if (t == "[Term]") {
        in_term = true;
        current.emplace();
        current->line = line_no;
      }
      continue;
    }
    if (!in_term) continue;
    auto colon = t.find(':');
    if (colon == std::string_view::npos) continue;
    auto tag = trim(t.substr(0, colon));
    auto value = trim(t.substr(colon + 1));
    if (tag == "id") {
      current->id = normalize_id(clean_identifier(value));
    } else if (tag == "name") {
      current->name = std::string(value);
    } else if (tag == "def") {
      current->has_definition = true;
      if (!value.empty() && value.front() == '"') {
        current->definition = read_quoted(value, nullptr);
      } else {
        current->definition = strip_trailing_xref(value);
      }
    } else if (tag == "is_obsolete") {
      current->obsolete = to_lower(clean_identifier(value)) == "true";
    }
  }
  close();
  return result;
}

ParseResult parse_onto_json(std::string_view text, const ParseOptions& options) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse,
                "ontology JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  ParseResult result;
  std::set<std::string> seen;
  auto graphs = doc.find("graphs");
  if (graphs == doc.end() || !graphs->is_array()) {
    throw Error(ErrorCode::kParse, "ontology JSON has no graphs[] array");
  }
  for (const auto& graph : *graphs) {
    auto nodes = graph.find("nodes");
    if (nodes == graph.end() || !nodes->is_array()) continue;
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      const auto& node = (*nodes)[i];
      auto id = string_or_empty(node, "id");
      auto name = string_or_empty(node, "lbl");
      if (id.empty() || name.empty()) {
        if (options.strict) {
          throw Error(ErrorCode::kParse, "node " + std::to_string(i) + " lacks " +
                                             (id.empty() ? "id" : "lbl"));
        }
        ++result.skipped;
        continue;
      }
      if (json_deprecated(node) && !options.keep_obsolete) {
        ++result.obsolete;
        continue;
      }
      OntologyTerm term;
      term.id = normalize_id(id);
      term.name = name;
      term.definition = json_description(node);
      term.definition_missing = term.definition.empty();
      term.source = TermSource::kJson;
      term.ontology_name = options.ontology_name;
      admit(result, seen, std::move(term), options, i);
    }
  }
  return result;
}

ParseResult parse_file(const std::string& path, const ParseOptions& options) {
  auto text = read_file(path);
  auto lower = to_lower(path);
  auto ends_with = [&](std::string_view suffix) {
    return lower.size() >= suffix.size() &&
           lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".obo")) return parse_obo(text, options);
  if (ends_with(".json")) return parse_onto_json(text, options);
  if (ends_with(".jsonld")) {
    ParseResult result;
    result.terms = terms_from_jsonld(parse_jsonld(text), options.ontology_name);
    return result;
  }
  throw Error(ErrorCode::kInvalidArgument, "unrecognized ontology file extension: " + path);
}

JsonLdDoc to_jsonld(const std::vector<OntologyTerm>& terms) {
  std::map<std::string, int> counts;
  for (const auto& t : terms) {
    if (t.id.empty()) throw Error(ErrorCode::kInvalidArgument, "term with empty id");
    ++counts[t.id];
  }
  std::string dups;
  for (const auto& [id, n] : counts) {
    if (n > 1) dups += (dups.empty() ? "" : ", ") + id;
  }
  if (!dups.empty()) throw Error(ErrorCode::kDuplicate, "duplicate term ids: " + dups);

  JsonLdDoc doc;
  doc.context = {{"description", kDescriptionIri}, {"name", kNameIri}};
  doc.graph.reserve(terms.size());
  for (const auto& t : terms) doc.graph.push_back({t.id, t.name, t.definition});
  std::sort(doc.graph.begin(), doc.graph.end(),
            [](const JsonLdNode& a, const JsonLdNode& b) { return a.id < b.id; });
  return doc;
}

std::string serialize_jsonld(const JsonLdDoc& doc) {
  json out;
  json ctx = json::object();
  for (const auto& [k, v] : doc.context) ctx[k] = v;
  out["@context"] = std::move(ctx);
  json graph = json::array();
  for (const auto& n : doc.graph) {
    graph.push_back({{"@id", n.id}, {"name", n.name}, {"description", n.description}});
  }
  out["@graph"] = std::move(graph);
  return out.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

JsonLdDoc parse_jsonld(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse,
                "JSON-LD parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  JsonLdDoc out;
  try {
    for (const auto& [k, v] : doc.at("@context").items()) {
      out.context.emplace_back(k, v.get<std::string>());
    }
    for (const auto& n : doc.at("@graph")) {
      out.graph.push_back({n.at("@id").get<std::string>(), n.value("name", ""),
                           n.value("description", "")});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed JSON-LD: ") + e.what());
  }
  return out;
}

std::vector<OntologyTerm> terms_from_jsonld(const JsonLdDoc& doc,
                                            const std::string& ontology_name) {
  std::vector<OntologyTerm> terms;
  terms.reserve(doc.graph.size());
  for (const auto& n : doc.graph) {
    OntologyTerm t;
    t.id = n.id;
    t.name = n.name;
    t.definition = n.description;
    t.definition_missing = n.description.empty();
    t.source = TermSource::kJson;
    t.ontology_name = ontology_name;
    terms.push_back(std::move(t));
  }
  return terms;
}

std::vector<SourceDoc> to_source_docs(const std::vector<OntologyTerm>& terms) {
  std::vector<SourceDoc> docs;
  docs.reserve(terms.size());
  for (const auto& t : terms) {
    SourceDoc d;
    d.id = t.id;
    d.title = t.name;
    d.text = t.name + ": " + (t.definition_missing ? std::string("(no definition)") : t.definition);
    d.origin = t.ontology_name;
    d.corpus = "ontology";
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace bioagents::ontology
