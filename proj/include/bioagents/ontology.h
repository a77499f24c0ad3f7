#pragma once

// Ontology term extraction from OBO 1.2 and OBO-Graphs JSON, and the JSON-LD
// knowledge base built from the extracted terms. Only id, name and definition
// are kept.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bioagents/source_doc.h"

namespace bioagents::ontology {

enum class TermSource { kObo, kJson };

struct OntologyTerm {
  std::string id;
  std::string name;
  std::string definition;
  TermSource source = TermSource::kObo;
  std::string ontology_name;
  bool definition_missing = false;

  bool operator==(const OntologyTerm&) const = default;
};

struct ParseOptions {
  bool strict = false;
  bool keep_obsolete = false;
  std::string ontology_name;
};

struct ParseResult {
  std::vector<OntologyTerm> terms;
  // Stanzas/nodes dropped for lacking id or name, or repeating an id.
  std::size_t skipped = 0;
  std::size_t obsolete = 0;
};

// Throws Error(kParse) in strict mode, naming the offending stanza's line.
ParseResult parse_obo(std::string_view text, const ParseOptions& options = {});

// Throws Error(kParse) with the byte offset when the text is not JSON.
ParseResult parse_onto_json(std::string_view text, const ParseOptions& options = {});

// Picks the parser by extension (.obo or .json) and reads the file.
ParseResult parse_file(const std::string& path, const ParseOptions& options = {});

// Compacts OBO PURLs (http://purl.obolibrary.org/obo/GO_0001) to CURIEs
// (GO:0001) and EDAM IRIs (http://edamontology.org/format_1930) to
// format:1930; other identifiers pass through unchanged.
std::string normalize_id(std::string_view id);

inline constexpr const char* kNameIri = "http://schema.org/name";
inline constexpr const char* kDescriptionIri = "http://schema.org/description";

struct JsonLdNode {
  std::string id;
  std::string name;
  std::string description;

  bool operator==(const JsonLdNode&) const = default;
};

struct JsonLdDoc {
  std::vector<std::pair<std::string, std::string>> context;
  std::vector<JsonLdNode> graph;
};

// Throws Error(kDuplicate) listing every repeated id.
JsonLdDoc to_jsonld(const std::vector<OntologyTerm>& terms);

// Canonical form: sorted keys, two-space indent, UTF-8, trailing LF.
std::string serialize_jsonld(const JsonLdDoc& doc);
JsonLdDoc parse_jsonld(std::string_view text);

// Terms recovered from a knowledge base; definition_missing is set for empty
// descriptions.
std::vector<OntologyTerm> terms_from_jsonld(const JsonLdDoc& doc,
                                            const std::string& ontology_name = {});

// One retrievable document per term.
std::vector<SourceDoc> to_source_docs(const std::vector<OntologyTerm>& terms);

}  // namespace bioagents::ontology
