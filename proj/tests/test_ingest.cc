#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "bioagents/error.h"
#include "bioagents/ingest.h"
#include "bioagents/ontology.h"
#include "bioagents/text.h"
#include "support.h"

using namespace bioagents;
using namespace bioagents::ingest;
using nlohmann::json;
using testing::fixture;

namespace {

std::string question_line(const std::string& id, const std::vector<int>& upvotes) {
  json answers = json::array();
  for (std::size_t i = 0; i < upvotes.size(); ++i) {
    answers.push_back({{"text", "answer " + std::to_string(i)}, {"upvotes", upvotes[i]}, {"accepted", false}});
  }
  return json{{"id", id}, {"title", "t " + id}, {"body", "b"}, {"tags", {"x"}}, {"answers", answers}}.dump();
}

// Serves the TRS fixture listing with limit/offset pagination and a
// `next_page` header, the way the BioContainers registry does.
void serve_trs(httplib::Server& s, const json& listing, std::atomic<int>* hits = nullptr) {
  s.Get("/ga4gh/trs/v2/tools", [listing, hits](const httplib::Request& req, httplib::Response& res) {
    if (hits) ++*hits;
    const int limit = std::stoi(req.get_param_value("limit"));
    const int offset = std::stoi(req.get_param_value("offset"));
    json page = json::array();
    for (int i = offset; i < std::min<int>(offset + limit, listing.size()); ++i) page.push_back(listing[i]);
    if (offset + limit < static_cast<int>(listing.size())) {
      res.set_header("next_page", "/ga4gh/trs/v2/tools?limit=" + std::to_string(limit) +
                                      "&offset=" + std::to_string(offset + limit));
    }
    res.set_content(page.dump(), "application/json");
  });
}

json trs_listing() { return json::parse(read_file(fixture("trs/tools.json"))); }

std::vector<std::string> oracle_top(const json& listing, std::size_t n) {
  std::vector<std::pair<long long, std::string>> rows;
  for (const auto& t : listing) rows.emplace_back(-t.at("pulls").get<long long>(), t.at("name"));
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> names;
  for (std::size_t i = 0; i < std::min(n, rows.size()); ++i) names.push_back(rows[i].second);
  return names;
}

}  // namespace

TEST_CASE("answers below the upvote floor are dropped") {
  auto load = parse_biostars(question_line("q", {0, 3}) + "\n");
  REQUIRE(load.records.size() == 1);
  REQUIRE(load.records[0].answers.size() == 1);
  CHECK(load.records[0].answers[0].upvotes == 3);
  CHECK(load.dropped_answers == 1);
}

TEST_CASE("empty dump gives no records") {
  CHECK(parse_biostars("").records.empty());
  testing::TempDir dir;
  write_file_atomic(dir / "empty.jsonl", "");
  CHECK(load_biostars(dir / "empty.jsonl").records.empty());
}

TEST_CASE("biostars fixture keeps four of five questions") {
  auto load = load_biostars(fixture("biostars/sample.jsonl"));
  CHECK(load.records.size() == 4);
  CHECK(load.dropped_questions == 1);
  std::vector<std::string> ids;
  for (const auto& r : load.records) ids.push_back(r.id);
  CHECK(ids == std::vector<std::string>{"q1", "q2", "q3", "q5"});
  CHECK(load.records[0].tags == std::vector<std::string>{"fastqc", "quality-control"});
}

TEST_CASE("loading is idempotent") {
  auto a = load_biostars(fixture("biostars/sample.jsonl"));
  auto b = load_biostars(fixture("biostars/sample.jsonl"));
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(to_json_line(a.records[i]) == to_json_line(b.records[i]));
  }
}

TEST_CASE("missing file and malformed lines") {
  CHECK_THROWS_AS(load_biostars("/nonexistent/dump.jsonl"), Error);
  std::string text = question_line("a", {1}) + "\n{broken\n" + question_line("b", {2}) + "\n";
  auto lenient = parse_biostars(text);
  CHECK(lenient.records.size() == 2);
  CHECK(lenient.malformed_lines == 1);
  BiostarsOptions strict;
  strict.strict = true;
  try {
    parse_biostars(text, strict);
    FAIL("strict mode should abort");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("tags are lowercased and deduplicated") {
  auto line = json{{"id", "t"}, {"title", "x"}, {"body", "y"}, {"tags", {"BWA", "bwa", "RNA-Seq"}},
                   {"answers", {{{"text", "a"}, {"upvotes", 1}, {"accepted", true}}}}}
                  .dump();
  auto load = parse_biostars(line);
  REQUIRE(load.records.size() == 1);
  CHECK(load.records[0].tags == std::vector<std::string>{"bwa", "rna-seq"});
}

TEST_CASE("property: upvote filter soundness over random dumps") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const int min_up = static_cast<int>(rng() % 4);
    std::string text;
    std::size_t expected_records = 0;
    std::size_t expected_answers = 0;
    const int questions = 1 + static_cast<int>(rng() % 15);
    for (int q = 0; q < questions; ++q) {
      std::vector<int> ups(rng() % 5);
      std::size_t kept = 0;
      for (auto& u : ups) {
        u = static_cast<int>(rng() % 6);
        if (u >= min_up) ++kept;
      }
      if (kept > 0) {
        ++expected_records;
        expected_answers += kept;
      }
      text += question_line("q" + std::to_string(q), ups) + "\n";
    }
    BiostarsOptions opts;
    opts.min_upvotes = min_up;
    auto load = parse_biostars(text, opts);
    CHECK(load.records.size() == expected_records);
    std::size_t answers = 0;
    for (const auto& r : load.records) {
      CHECK_FALSE(r.answers.empty());
      for (const auto& a : r.answers) CHECK(a.upvotes >= min_up);
      answers += r.answers.size();
    }
    CHECK(answers == expected_answers);
  }
}

TEST_CASE("reference answer prefers upvotes, then accepted, then order") {
  QARecord r;
  r.answers = {{"first", 2, false}, {"accepted", 2, true}, {"low", 1, true}};
  CHECK(reference_answer(r).text == "accepted");
  r.answers = {{"first", 3, false}, {"second", 3, false}};
  CHECK(reference_answer(r).text == "first");
}

TEST_CASE("tag categorization") {
  gateway::FunctionChatBackend keyword([](std::span<const gateway::ChatMessage> m, const gateway::GenConfig&) {
    const auto& tag = m.back().content;
    if (tag.find("rna-seq") != std::string::npos) return std::string("analysis");
    if (tag.find("bwa") != std::string::npos) return std::string("Tool.");
    if (tag.find("snakemake") != std::string::npos) return std::string("programming");
    if (tag.find("fastq") != std::string::npos) return std::string("data_format");
    return std::string("I am not sure what this is");
  });

  SUBCASE("keyword mock") {
    TagCategorizer c(keyword);
    CHECK(c.categorize({"rna-seq"})[0].category == TagCategory::kAnalysis);
    CHECK(c.categorize({"fastq"})[0].category == TagCategory::kDataFormat);
  }
  SUBCASE("garbage reply maps to other") {
    TagCategorizer c(keyword);
    auto r = c.categorize({"weird-tag"});
    CHECK(r[0].category == TagCategory::kOther);
    CHECK_FALSE(r[0].flagged);
  }
  SUBCASE("repeated tags cost one call") {
    TagCategorizer c(keyword);
    auto r = c.categorize({"bwa", "bwa", "snakemake"});
    CHECK(r.size() == 3);
    CHECK(c.backend_calls() == 2);
    CHECK(keyword.attempts() == 2);
    CHECK(r[0].category == TagCategory::kTool);
    CHECK(r[2].category == TagCategory::kProgramming);
  }
  SUBCASE("failing backend falls back to other and flags") {
    gateway::FunctionChatBackend down([](std::span<const gateway::ChatMessage>, const gateway::GenConfig&) -> std::string {
      throw Error(ErrorCode::kUnavailable, "down");
    });
    TagCategorizer c(down, 2);
    auto r = c.categorize({"bwa"});
    CHECK(r[0].category == TagCategory::kOther);
    CHECK(r[0].flagged);
    CHECK(down.attempts() == 3);
  }
  SUBCASE("prompt names all five categories") {
    auto prompt = categorization_prompt("x");
    for (const char* name : {"tool", "analysis", "data_format", "programming", "other"}) {
      CHECK(prompt[0].content.find(name) != std::string::npos);
    }
  }
}

TEST_CASE("property: categorization totality") {
  std::mt19937 rng(99);
  const std::vector<std::string> replies = {"tool", "analysis", "data_format", "programming", "other", "??", ""};
  gateway::FunctionChatBackend mock([&](std::span<const gateway::ChatMessage> m, const gateway::GenConfig&) {
    return replies[fnv1a64(m.back().content) % replies.size()];
  });
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> tags;
    for (int i = 0, n = static_cast<int>(rng() % 20); i < n; ++i) tags.push_back("t" + std::to_string(rng() % 8));
    TagCategorizer c(mock);
    auto out = c.categorize(tags);
    CHECK(out.size() == tags.size());
    std::set<std::string> unique(tags.begin(), tags.end());
    std::set<std::string> covered;
    for (const auto& a : out) covered.insert(a.tag);
    CHECK(covered == unique);
    CHECK(c.backend_calls() == unique.size());
  }
}

TEST_CASE("ranking by downloads with name tie-break") {
  std::vector<RegistryTool> tools = {{"a", 10, {"1"}}, {"b", 30, {"1"}}, {"c", 20, {"1"}}};
  auto top = rank_tools(tools, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].name == "b");
  CHECK(top[0].rank == 1);
  CHECK(top[1].name == "c");
  CHECK(top[1].rank == 2);
  CHECK(rank_tools(tools, 5).size() == 3);
  std::vector<RegistryTool> tied = {{"zeta", 5, {}}, {"alpha", 5, {}}};
  CHECK(rank_tools(tied, 2)[0].name == "alpha");
}

TEST_CASE("top 50 from the paginated fixture registry") {
  auto listing = trs_listing();
  std::atomic<int> hits{0};
  testing::LocalServer server([&](httplib::Server& s) { serve_trs(s, listing, &hits); });
  TrsOptions opts;
  opts.base_url = server.url("/ga4gh/trs/v2");
  opts.page_size = 25;
  TrsRegistry registry(opts);
  auto top = fetch_top_tools(registry, 50);
  REQUIRE(top.size() == 50);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < top.size(); ++i) {
    names.push_back(top[i].name);
    CHECK(top[i].rank == static_cast<int>(i) + 1);
  }
  CHECK(names == oracle_top(listing, 50));
  CHECK(hits == 3);
  CHECK(registry.requests() == 3);
}

TEST_CASE("registry with fewer tools than requested") {
  json listing = json::array();
  for (const char* n : {"x", "y", "z"}) listing.push_back({{"name", n}, {"pulls", 1}, {"versions", {"1.0"}}});
  testing::LocalServer server([&](httplib::Server& s) { serve_trs(s, listing); });
  TrsOptions opts;
  opts.base_url = server.url("/ga4gh/trs/v2");
  TrsRegistry registry(opts);
  CHECK(fetch_top_tools(registry, 5).size() == 3);
}

TEST_CASE("pagination loop is detected") {
  testing::LocalServer server([&](httplib::Server& s) {
    s.Get("/trs/tools", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("next_page", "/trs/tools?limit=100&offset=0");
      res.set_content(R"([{"name":"a","pulls":1,"versions":[]}])", "application/json");
    });
  });
  TrsOptions opts;
  opts.base_url = server.url("/trs");
  TrsRegistry registry(opts);
  try {
    registry.list_tools();
    FAIL("expected loop detection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLoopDetected);
  }
}

TEST_CASE("registry failures are retried then abort") {
  std::atomic<int> hits{0};
  testing::LocalServer server([&](httplib::Server& s) {
    s.Get("/trs/tools", [&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 502;
    });
  });
  TrsOptions opts;
  opts.base_url = server.url("/trs");
  opts.retries = 3;
  opts.backoff = std::chrono::milliseconds(1);
  TrsRegistry registry(opts);
  CHECK_THROWS_AS(registry.list_tools(), Error);
  CHECK(hits == 4);
}

TEST_CASE("help docs from fixtures") {
  FixtureHelpProvider provider(fixture("help"));
  ToolRecord bwa{"bwa", 1, 10, {"0.7.17", "0.7.18", "0.7.19"}, {}};
  auto collected = collect_help_docs(bwa, provider);
  CHECK(collected.docs.size() == 2);
  CHECK(collected.empty_versions == 1);
  for (const auto& d : collected.docs) {
    CHECK(d.source == "fixture");
    CHECK_FALSE(is_blank(d.text));
  }

  ToolRecord none{"fastqc", 1, 10, {}, {}};
  CHECK(collect_help_docs(none, provider).docs.empty());

  ToolRecord missing{"fastqc", 1, 10, {"9.9.9", "0.12.1"}, {}};
  auto partial = collect_help_docs(missing, provider);
  CHECK(partial.docs.size() == 1);
  CHECK(partial.failed_versions == std::vector<std::string>{"9.9.9"});
}

TEST_CASE("unavailable container runtime skips the tool") {
  ContainerHelpProvider provider("definitely-not-a-container-runtime");
  CHECK_FALSE(provider.runtime_available());
  ToolRecord t{"fastqc", 1, 1, {"0.12.1"}, {}};
  auto collected = collect_help_docs(t, provider);
  CHECK(collected.provider_unavailable);
  CHECK(collected.docs.empty());
}

TEST_CASE("live container help capture") {
  ContainerHelpProvider provider("docker");
  if (!provider.runtime_available()) {
    MESSAGE("no container runtime present; live capture not exercised");
    return;
  }
  ToolRecord t{"fastqc", 1, 1, {"0.12.1--hdfd78af_0"}, {}};
  auto collected = collect_help_docs(t, provider);
  if (collected.docs.empty()) {
    MESSAGE("container image not available locally");
    return;
  }
  CHECK(collected.docs[0].source == "live-container");
  CHECK(collected.docs[0].text.find("--help") != std::string::npos);
}

TEST_CASE("tool records round-trip through JSON") {
  ToolRecord t{"samtools", 2, 800, {"1.17"}, {{"samtools", "1.17", "usage", "fixture"}}};
  auto back = parse_tools(serialize_tools({t}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].name == "samtools");
  CHECK(back[0].rank == 2);
  CHECK(back[0].downloads == 800);
  CHECK(back[0].help_docs.size() == 1);
  CHECK(back[0].help_docs[0].text == "usage");
}

TEST_CASE("nf-core documentation tree") {
  auto result = ingest_nfcore(fixture("nfcore"));
  CHECK(result.docs.size() == 3);
  CHECK(result.empty_files == 1);
  std::vector<std::string> ids;
  for (const auto& d : result.docs) {
    ids.push_back(d.id);
    CHECK(d.corpus == "nfcore");
  }
  CHECK(ids == std::vector<std::string>{"modules/nf-core/fastqc/meta.yml",
                                        "modules/nf-core/star/align/meta.yml",
                                        "pipelines/viralrecon/usage.md"});

  testing::TempDir empty;
  CHECK(ingest_nfcore(empty.str()).docs.empty());
  CHECK_THROWS_AS(ingest_nfcore(empty / "missing"), Error);

  auto back = parse_source_docs(serialize_source_docs(result.docs));
  REQUIRE(back.size() == 3);
  CHECK(back[1].text == result.docs[1].text);
}

namespace {

std::vector<ToolRecord> dataset_tools() {
  auto tools = parse_tools(read_file(fixture("tools/dataset_tools.json")));
  FixtureHelpProvider provider(fixture("help"));
  for (auto& t : tools) t.help_docs = collect_help_docs(t, provider).docs;
  return tools;
}

std::vector<ontology::OntologyTerm> swo_terms() {
  return ontology::parse_file(fixture("ontology/swo_terms.obo")).terms;
}

}  // namespace

TEST_CASE("fine-tune dataset over the fixture corpus") {
  auto tools = dataset_tools();
  auto terms = swo_terms();
  REQUIRE(tools.size() == 2);
  REQUIRE(terms.size() == 3);
  auto ds = build_finetune_dataset(tools, terms, {});
  CHECK(ds.records.size() == 7);
  auto jsonl = to_jsonl(ds);
  CHECK(jsonl == to_jsonl(build_finetune_dataset(tools, terms, {})));

  std::size_t lines = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    auto rec = json::parse(jsonl.substr(pos, nl - pos));
    const auto& msgs = rec.at("messages");
    CHECK(msgs.front().at("role") != "assistant");
    CHECK(msgs.back().at("role") == "assistant");
    pos = nl + 1;
    ++lines;
  }
  CHECK(lines == 7);
  for (const auto& r : ds.records) CHECK(r.token_estimate <= 1000);
  // tools by rank first, then terms by id
  CHECK(ds.records[0].messages[1].content.find("fastqc") != std::string::npos);
  CHECK(ds.records[2].messages[1].content.find("samtools") != std::string::npos);
  CHECK(ds.records[4].messages[1].content.find("FastQC") != std::string::npos);
}

TEST_CASE("oversized help text is truncated at a word boundary") {
  std::string help;
  for (int i = 0; i < 2000; ++i) help += "option" + std::to_string(i) + " ";
  ToolRecord t{"big", 1, 1, {"1.0"}, {{"big", "1.0", help, "fixture"}}};
  DatasetOptions opts;
  opts.cap = 100;
  auto ds = build_finetune_dataset({t}, {}, opts);
  REQUIRE(ds.records.size() == 1);
  const auto& r = ds.records[0];
  CHECK(r.truncated);
  CHECK(r.token_estimate <= 100);
  const auto& content = r.messages.back().content;
  CHECK(help.rfind(content, 0) == 0);
  CHECK(content.back() != ' ');
  CHECK(help[content.size()] == ' ');
}

TEST_CASE("empty dataset inputs") {
  CHECK(build_finetune_dataset({}, {}, {}).records.empty());
}

TEST_CASE("dataset over a fifty-tool registry") {
  std::vector<RegistryTool> registry;
  for (int i = 0; i < 60; ++i) registry.push_back({"tool" + std::to_string(i), 1000 - i, {"1.0", "2.0"}});
  auto top = rank_tools(registry, 50);
  for (auto& t : top) {
    for (const auto& v : t.versions) t.help_docs.push_back({t.name, v, "usage: " + t.name + " [options]", "fixture"});
  }
  auto ds = build_finetune_dataset(top, {}, {});
  CHECK(ds.records.size() == 100);
}
