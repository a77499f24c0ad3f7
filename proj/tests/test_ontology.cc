#include <doctest.h>

#include <random>
#include <set>

#include "bioagents/error.h"
#include "bioagents/ontology.h"
#include "bioagents/text.h"
#include "support.h"

using namespace bioagents;
using namespace bioagents::ontology;
using testing::fixture;

namespace {

std::set<std::pair<std::string, std::string>> id_names(const std::vector<OntologyTerm>& terms) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& t : terms) out.emplace(t.id, t.name);
  return out;
}

}  // namespace

TEST_CASE("single OBO stanza") {
  auto r = parse_obo("[Term]\nid: X:1\nname: FASTQ\ndef: \"A format...\" [xref]\n");
  REQUIRE(r.terms.size() == 1);
  CHECK(r.terms[0].id == "X:1");
  CHECK(r.terms[0].name == "FASTQ");
  CHECK(r.terms[0].definition == "A format...");
  CHECK(r.terms[0].source == TermSource::kObo);
  CHECK_FALSE(r.terms[0].definition_missing);
}

TEST_CASE("empty OBO document") {
  CHECK(parse_obo("").terms.empty());
  CHECK(parse_obo("format-version: 1.2\n").terms.empty());
}

TEST_CASE("obsolete stanzas are dropped unless kept") {
  auto text = read_file(fixture("ontology/obsolete.obo"));
  auto r = parse_obo(text);
  CHECK(r.terms.size() == 2);
  CHECK(r.obsolete == 1);
  ParseOptions keep;
  keep.keep_obsolete = true;
  CHECK(parse_obo(text, keep).terms.size() == 3);
}

TEST_CASE("escaped quotes and non-Term stanzas") {
  auto r = parse_obo(read_file(fixture("ontology/edam_subset.obo")));
  REQUIRE(r.terms.size() == 3);
  CHECK(r.terms[2].definition == "The analysis of \"transcriptome\" sequencing data.");
}

TEST_CASE("stanzas missing id or name") {
  const std::string text = "[Term]\nname: no id\n\n[Term]\nid: A:1\n\n[Term]\nid: A:2\nname: ok\n";
  auto r = parse_obo(text);
  CHECK(r.terms.size() == 1);
  CHECK(r.skipped == 2);
  ParseOptions strict;
  strict.strict = true;
  try {
    parse_obo(text, strict);
    FAIL("strict parse should fail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("term without definition is flagged") {
  auto r = parse_obo("[Term]\nid: A:1\nname: bare\n");
  REQUIRE(r.terms.size() == 1);
  CHECK(r.terms[0].definition_missing);
  CHECK(r.terms[0].definition.empty());
}

TEST_CASE("ontology JSON node") {
  auto r = parse_onto_json(read_file(fixture("ontology/graph10.json")));
  CHECK(r.terms.size() == 8);
  CHECK(r.skipped == 2);
  CHECK(r.terms[0].name == "operation");
  CHECK(r.terms[0].definition == "A function that processes a set of inputs and results in a set of outputs.");
  CHECK(r.terms[0].source == TermSource::kJson);
  CHECK(r.terms.back().definition_missing);
}

TEST_CASE("description fallback") {
  auto r = parse_onto_json(R"({"graphs":[{"nodes":[{"id":"A:1","lbl":"x","meta":{"description":"from description"}}]}]})");
  REQUIRE(r.terms.size() == 1);
  CHECK(r.terms[0].definition == "from description");
  CHECK_FALSE(r.terms[0].definition_missing);
}

TEST_CASE("invalid JSON reports an offset") {
  try {
    parse_onto_json("{\"graphs\": [");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("at byte 13") != std::string::npos);
  }
}

TEST_CASE("paired OBO and JSON fixtures agree") {
  auto obo = parse_file(fixture("ontology/edam_subset.obo")).terms;
  auto js = parse_file(fixture("ontology/edam_subset.json")).terms;
  CHECK(obo.size() == 3);
  CHECK(id_names(obo) == id_names(js));
  for (std::size_t i = 0; i < obo.size(); ++i) CHECK(obo[i].definition == js[i].definition);
}

TEST_CASE("normalize_id") {
  CHECK(normalize_id("http://purl.obolibrary.org/obo/GO_0008150") == "GO:0008150");
  CHECK(normalize_id("http://edamontology.org/format_1930") == "format:1930");
  CHECK(normalize_id("SWO:0000001") == "SWO:0000001");
}

TEST_CASE("JSON-LD conversion") {
  std::vector<OntologyTerm> terms = {{"B:2", "second", "two", TermSource::kObo, "t", false},
                                     {"A:1", "first", "", TermSource::kObo, "t", true}};
  auto doc = to_jsonld(terms);
  REQUIRE(doc.graph.size() == 2);
  CHECK(doc.graph[0].id == "A:1");
  CHECK(doc.graph[0].description.empty());
  CHECK(doc.graph[1].id == "B:2");
  auto text = serialize_jsonld(doc);
  CHECK(text.find("\"@context\"") < text.find("\"@graph\""));
  CHECK(text.find(kNameIri) != std::string::npos);
  CHECK(text.find(kDescriptionIri) != std::string::npos);
  CHECK(text.back() == '\n');
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("duplicate ids are reported") {
  std::vector<OntologyTerm> terms = {{"A:1", "x", "", TermSource::kObo, "", true},
                                     {"A:1", "y", "", TermSource::kObo, "", true},
                                     {"B:1", "z", "", TermSource::kObo, "", true}};
  try {
    to_jsonld(terms);
    FAIL("duplicates must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicate);
    CHECK(std::string(e.what()).find("A:1") != std::string::npos);
  }
}

TEST_CASE("JSON-LD round trip conserves terms") {
  auto terms = parse_file(fixture("ontology/edam_subset.obo")).terms;
  auto text = serialize_jsonld(to_jsonld(terms));
  auto back = terms_from_jsonld(parse_jsonld(text));
  REQUIRE(back.size() == terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    CHECK(back[i].id == terms[i].id);
    CHECK(back[i].name == terms[i].name);
    CHECK(back[i].definition == terms[i].definition);
  }
  CHECK(serialize_jsonld(to_jsonld(back)) == text);
}

TEST_CASE("property: term conservation and clean definitions") {
  std::mt19937 rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    std::string obo = "format-version: 1.2\n\n";
    std::set<std::string> ids;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      std::string id = "R:" + std::to_string(rng() % 50);
      if (!ids.insert(id).second) continue;
      std::string def = "Definition " + std::to_string(rng());
      if (rng() % 3 == 0) def += " with \\\"quoted\\\" words";
      obo += "[Term]\nid: " + id + "\nname: term " + id + "\ndef: \"" + def + "\"";
      if (rng() % 2) obo += " [PMID:" + std::to_string(rng() % 1000) + "]";
      obo += "\n\n";
    }
    auto parsed = parse_obo(obo);
    CHECK(parsed.terms.size() == ids.size());
    for (const auto& t : parsed.terms) {
      CHECK(t.definition.front() != '"');
      CHECK(t.definition.back() != '"');
      CHECK(t.definition.find('[') == std::string::npos);
      CHECK(t.definition.find("\\\"") == std::string::npos);
    }
    auto doc = to_jsonld(parsed.terms);
    CHECK(doc.graph.size() == parsed.terms.size());
    CHECK(serialize_jsonld(doc) == serialize_jsonld(to_jsonld(parse_obo(obo).terms)));
  }
}

TEST_CASE("terms become source documents") {
  auto docs = to_source_docs(parse_file(fixture("ontology/swo_terms.obo")).terms);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].corpus == "ontology");
  CHECK(docs[0].text.find("FastQC") != std::string::npos);
}
