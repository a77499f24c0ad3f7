#include "bioagents/app/cli.h"

#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "bioagents/app/config.h"
#include "bioagents/app/service.h"
#include "bioagents/app/trace_store.h"
#include "bioagents/error.h"
#include "bioagents/eval/benchmark.h"
#include "bioagents/eval/rubric.h"
#include "bioagents/eval/tasks.h"
#include "bioagents/index.h"
#include "bioagents/ingest.h"
#include "bioagents/ontology.h"
#include "bioagents/orchestrator.h"
#include "bioagents/text.h"

namespace bioagents::app {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string log_level = "warn";

  std::string input;
  std::string out;
  int min_upvotes = 1;
  bool strict = false;
  std::string categorize_out;

  std::string registry;
  int top = 50;
  std::string help_fixtures;
  std::string container_runtime;

  std::string dir;
  std::string ontology_name;
  bool keep_obsolete = false;

  std::vector<std::string> corpus;
  std::size_t max_chars = 1200;
  std::size_t overlap = 200;
  std::string index_path;

  std::string tools_path;
  std::vector<std::string> terms;
  std::size_t cap = 1000;

  std::string query;
  bool return_last = false;
  std::optional<int> threshold;
  std::optional<int> max_rounds;
  std::optional<std::size_t> retrieval_k;

  std::string pairs;
  std::vector<std::string> bench_backends;
  bool recall = false;
  std::size_t jobs = 1;

  std::string scores;

  std::string host;
  int port = 0;
};

AppConfig config_for(const Options& o, bool require_index = true) {
  AppConfig c = o.config_path.empty() ? default_config() : load_config(o.config_path, require_index);
  if (o.threshold) c.pipeline.threshold = *o.threshold;
  if (o.max_rounds) c.pipeline.max_rounds = *o.max_rounds;
  if (o.retrieval_k) c.pipeline.retrieval_k = *o.retrieval_k;
  if (o.return_last) c.pipeline.return_last = true;
  orchestrator::validate(c.pipeline);
  return c;
}

void write_output(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

std::vector<SourceDoc> collect_corpus(const std::vector<std::string>& paths, std::ostream& err) {
  std::vector<SourceDoc> docs;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      auto ingest = ingest::ingest_nfcore(p);
      for (auto& d : ingest.docs) docs.push_back(std::move(d));
      continue;
    }
    if (!fs::exists(p)) throw Error(ErrorCode::kNotFound, "corpus path does not exist: " + p);
    const auto ext = to_lower(fs::path(p).extension().string());
    if (ext == ".jsonl") {
      for (auto& d : ingest::parse_source_docs(read_file(p))) docs.push_back(std::move(d));
    } else if (ext == ".obo" || ext == ".json" || ext == ".jsonld") {
      ontology::ParseOptions opts;
      opts.ontology_name = fs::path(p).stem().string();
      auto parsed = ontology::parse_file(p, opts);
      for (auto& d : ontology::to_source_docs(parsed.terms)) docs.push_back(std::move(d));
    } else {
      err << "skipping unrecognised corpus file " << p << "\n";
    }
  }
  return docs;
}

std::string ratings_line(const orchestrator::OrchestrationTrace& trace) {
  std::string s = "ratings:";
  for (const auto& r : trace.rounds) s += " " + std::to_string(r.self_rating);
  return s;
}

// -- subcommand bodies -----------------------------------------------------------

int ingest_biostars(const Options& o, std::ostream& out, std::ostream& err) {
  ingest::BiostarsOptions opts;
  opts.min_upvotes = o.min_upvotes;
  opts.strict = o.strict;
  auto load = ingest::load_biostars(o.input, opts);
  std::string jsonl;
  for (const auto& r : load.records) jsonl += ingest::to_json_line(r) + "\n";
  if (!o.out.empty()) write_file_atomic(o.out, jsonl);
  err << "records: " << load.records.size() << "  dropped questions: " << load.dropped_questions
      << "  dropped answers: " << load.dropped_answers
      << "  malformed lines: " << load.malformed_lines << "\n";
  if (o.out.empty()) out << jsonl;

  if (!o.categorize_out.empty()) {
    auto config = config_for(o);
    Runtime runtime(config);
    auto* backend = runtime.backend("classifier");
    if (!backend) backend = runtime.backend("reasoning");
    if (!backend) throw Error(ErrorCode::kInvalidArgument, "no classifier or reasoning backend configured");
    ingest::TagCategorizer categorizer(*backend, 2, config.pipeline.gen);
    std::vector<std::string> tags;
    for (const auto& r : load.records) tags.insert(tags.end(), r.tags.begin(), r.tags.end());
    auto assignments = categorizer.categorize(tags);
    std::map<std::string, ingest::TagAssignment> unique;
    for (auto& a : assignments) unique.emplace(a.tag, a);
    std::string csv = "tag,category,flagged\n";
    for (const auto& [tag, a] : unique) {
      csv += tag + "," + ingest::to_string(a.category) + "," + (a.flagged ? "true" : "false") + "\n";
    }
    write_file_atomic(o.categorize_out, csv);
    err << "categorized " << unique.size() << " tags with " << categorizer.backend_calls()
        << " backend calls\n";
  }
  return kExitOk;
}

int ingest_tools(const Options& o, std::ostream& out, std::ostream& err) {
  ingest::TrsOptions trs;
  trs.base_url = o.registry;
  ingest::TrsRegistry registry(trs);
  auto tools = ingest::fetch_top_tools(registry, o.top);

  std::unique_ptr<ingest::HelpProvider> provider;
  if (!o.help_fixtures.empty()) {
    provider = std::make_unique<ingest::FixtureHelpProvider>(o.help_fixtures);
  } else if (!o.container_runtime.empty()) {
    provider = std::make_unique<ingest::ContainerHelpProvider>(o.container_runtime);
  }
  std::size_t docs = 0;
  if (provider) {
    for (auto& t : tools) {
      auto collected = ingest::collect_help_docs(t, *provider);
      docs += collected.docs.size();
      t.help_docs = std::move(collected.docs);
    }
  }
  write_output(o.out, ingest::serialize_tools(tools), out);
  err << "tools: " << tools.size() << "  help docs: " << docs << "\n";
  return kExitOk;
}

int ingest_nfcore_cmd(const Options& o, std::ostream& out, std::ostream& err) {
  auto result = ingest::ingest_nfcore(o.dir);
  write_output(o.out, ingest::serialize_source_docs(result.docs), out);
  err << "documents: " << result.docs.size() << "  empty: " << result.empty_files
      << "  unreadable: " << result.unreadable_files << "\n";
  return kExitOk;
}

int ingest_ontology(const Options& o, std::ostream& out, std::ostream& err) {
  ontology::ParseOptions opts;
  opts.strict = o.strict;
  opts.keep_obsolete = o.keep_obsolete;
  opts.ontology_name = o.ontology_name.empty() ? fs::path(o.input).stem().string() : o.ontology_name;
  auto parsed = ontology::parse_file(o.input, opts);
  write_output(o.out, ontology::serialize_jsonld(ontology::to_jsonld(parsed.terms)), out);
  err << "terms: " << parsed.terms.size() << "  skipped: " << parsed.skipped
      << "  obsolete: " << parsed.obsolete << "\n";
  return kExitOk;
}

int index_build(const Options& o, std::ostream& out, std::ostream& err) {
  auto config = config_for(o, false);
  auto paths = o.corpus.empty() ? config.corpora : o.corpus;
  auto docs = collect_corpus(paths, err);
  index::ChunkPolicy policy{o.max_chars, o.overlap};
  std::vector<index::DocChunk> chunks;
  for (const auto& d : docs) {
    for (auto& c : index::chunk_document(d, policy)) chunks.push_back(std::move(c));
  }
  if (chunks.empty()) {
    err << "error: no documents found in corpus\n";
    return kExitError;
  }
  auto embedder = make_embedder(config.embedding, config.api_key);
  index::VectorIndex idx(embedder->dim());
  idx.add_chunks(chunks, *embedder);
  std::string target = !o.index_path.empty() ? o.index_path
                       : !config.index_path.empty() ? config.index_path
                                                    : std::string("index.bin");
  index::persist_index(idx, target);
  out << "indexed " << docs.size() << " documents as " << idx.size() << " chunks (dim "
      << idx.dim() << ") -> " << target << "\n";
  return kExitOk;
}

int index_stats(const Options& o, std::ostream& out, std::ostream&) {
  std::string path = o.index_path;
  if (path.empty()) path = config_for(o).index_path;
  if (path.empty()) throw Error(ErrorCode::kInvalidArgument, "no index given (--index or paths.index)");
  auto snap = index::load_index(path);
  std::map<std::string, std::size_t> by_corpus;
  std::map<std::string, int> sources;
  for (const auto& e : snap.entries) {
    auto it = e.chunk.meta.find("corpus");
    ++by_corpus[it == e.chunk.meta.end() ? "(none)" : it->second];
    sources[e.chunk.source_id] = 1;
  }
  out << "version: " << snap.version << "\n"
      << "dim: " << snap.dim << "\n"
      << "chunks: " << snap.entries.size() << "\n"
      << "sources: " << sources.size() << "\n";
  for (const auto& [corpus, n] : by_corpus) out << "corpus " << corpus << ": " << n << "\n";
  return kExitOk;
}

int dataset_build(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<ingest::ToolRecord> tools;
  if (!o.tools_path.empty()) tools = ingest::parse_tools(read_file(o.tools_path));
  if (!o.help_fixtures.empty()) {
    ingest::FixtureHelpProvider provider(o.help_fixtures);
    for (auto& t : tools) {
      if (t.help_docs.empty()) t.help_docs = ingest::collect_help_docs(t, provider).docs;
    }
  }
  std::vector<ontology::OntologyTerm> terms;
  for (const auto& path : o.terms) {
    ontology::ParseOptions opts;
    opts.ontology_name = fs::path(path).stem().string();
    auto parsed = ontology::parse_file(path, opts);
    terms.insert(terms.end(), parsed.terms.begin(), parsed.terms.end());
  }
  ingest::DatasetOptions opts;
  opts.cap = o.cap;
  auto dataset = ingest::build_finetune_dataset(tools, terms, opts);
  write_output(o.out, ingest::to_jsonl(dataset), out);
  err << "records: " << dataset.records.size() << "  truncated: " << dataset.truncated
      << "  skipped: " << dataset.skipped << "\n";
  return kExitOk;
}

int ask(const Options& o, std::ostream& out, std::ostream& err) {
  auto config = config_for(o);
  validate_roles(config);
  Runtime runtime(config);
  TraceStore store(config.traces_path);
  try {
    auto trace = orchestrator::run_pipeline(o.query, runtime.config().pipeline, runtime.deps());
    const auto id = store.store(trace);
    out << trace.final_answer << "\n\n"
        << ratings_line(trace) << "\n"
        << "rounds: " << trace.rounds.size() << "\n"
        << "final round: " << trace.final_round << "\n"
        << "trace: " << id << "\n";
    for (const auto& w : trace.warnings) err << "warning: " << w << "\n";
    return kExitOk;
  } catch (const orchestrator::PipelineError& e) {
    const auto id = store.store(e.partial_trace());
    err << "error: " << e.what() << "\npartial trace: " << id << "\n";
    return kExitError;
  }
}

int tasks_run(const Options& o, std::ostream& out, std::ostream& err) {
  auto config = config_for(o);
  validate_roles(config);
  Runtime runtime(config);
  TraceStore store(config.traces_path);
  int status = kExitOk;
  for (const auto& task : eval::builtin_tasks()) {
    out << eval::to_string(task.level) << "/" << eval::to_string(task.kind) << ": ";
    try {
      auto trace = orchestrator::run_pipeline(task.prompt, runtime.config().pipeline, runtime.deps());
      const auto id = store.store(trace);
      out << ratings_line(trace) << "  rounds: " << trace.rounds.size()
          << "  final round: " << trace.final_round << "  trace: " << id << "\n";
    } catch (const orchestrator::PipelineError& e) {
      const auto id = store.store(e.partial_trace());
      out << "FAILED (" << e.what() << ")  trace: " << id << "\n";
      err << "task failed: " << e.what() << "\n";
      status = kExitError;
    }
  }
  return status;
}

int tasks_list(std::ostream& out) {
  for (const auto& task : eval::builtin_tasks()) {
    out << eval::to_string(task.level) << "\t" << eval::to_string(task.kind) << "\t" << task.prompt
        << "\n";
  }
  return kExitOk;
}

int bench(const Options& o, std::ostream& out, std::ostream& err) {
  ingest::BiostarsOptions load_opts;
  auto load = ingest::load_biostars(o.pairs, load_opts);
  if (load.records.empty()) {
    err << "error: no usable question-answer pairs in " << o.pairs << "\n";
    return kExitError;
  }
  std::optional<Runtime> runtime;
  eval::ParrotBackend parrot(load.records);
  eval::EmptyBackend empty;
  std::vector<eval::NamedBackend> backends;
  gateway::GenConfig gen;
  for (const auto& name : o.bench_backends) {
    if (name == "parrot") {
      backends.push_back({name, &parrot});
    } else if (name == "empty") {
      backends.push_back({name, &empty});
    } else {
      if (!runtime) runtime.emplace(config_for(o));
      auto* b = runtime->backend(name);
      if (!b) throw Error(ErrorCode::kInvalidArgument, "unknown backend '" + name + "'");
      gen = runtime->config().pipeline.gen;
      backends.push_back({name, b});
    }
  }
  eval::BenchOptions opts;
  opts.metric = o.recall ? eval::ReportMetric::kRecall : eval::ReportMetric::kF1;
  opts.qa_source = o.pairs;
  opts.jobs = o.jobs;
  auto report = eval::run_benchmark(backends, load.records, gen, opts);
  if (!o.out.empty()) write_file_atomic(o.out, eval::report_to_json(report));
  out << eval::render_table(report);
  for (const auto& r : report.rows) {
    if (!r.valid) return kExitError;
  }
  return kExitOk;
}

int rubric(const Options& o, std::ostream& out, std::ostream&) {
  auto scores = eval::parse_rubric_csv(read_file(o.scores));
  out << eval::render_rubric(eval::aggregate_rubric(scores));
  return kExitOk;
}

AskService* g_service = nullptr;

int serve(const Options& o, std::ostream& out, std::ostream&) {
  auto config = config_for(o);
  validate_roles(config);
  Runtime runtime(config);
  TraceStore store(config.traces_path);
  AskService service(runtime, store);
  const std::string host = o.host.empty() ? config.bind_host : o.host;
  const int port = service.bind(host, o.port ? o.port : config.bind_port);
  out << "listening on " << host << ":" << port << std::endl;
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  service.listen();
  g_service = nullptr;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Multi-agent question answering for bioinformatics workflows", "bioagents"};
  app.require_subcommand(1);
  app.add_option("--config", o.config_path, "Configuration file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off");

  auto* ingest_cmd = app.add_subcommand("ingest", "Acquire and normalise corpora");
  ingest_cmd->require_subcommand(1);
  auto* biostars = ingest_cmd->add_subcommand("biostars", "Load a question-answer dump");
  biostars->add_option("--input", o.input, "JSON-lines dump")->required();
  biostars->add_option("--min-upvotes", o.min_upvotes, "Minimum upvotes for a kept answer");
  biostars->add_flag("--strict", o.strict, "Abort on the first malformed line");
  biostars->add_option("--out", o.out, "Normalised JSON-lines output");
  biostars->add_option("--categorize-out", o.categorize_out, "Write tag categories (CSV)");

  auto* tools = ingest_cmd->add_subcommand("tools", "Rank registry tools and collect help text");
  tools->add_option("--registry", o.registry, "TRS v2 base URL")->required();
  tools->add_option("--top", o.top, "Number of tools")->check(CLI::PositiveNumber);
  tools->add_option("--help-fixtures", o.help_fixtures, "Directory of <tool>/<version>.txt");
  tools->add_option("--container-runtime", o.container_runtime, "Capture help from containers");
  tools->add_option("--out", o.out, "Tools JSON output");

  auto* nfcore = ingest_cmd->add_subcommand("nfcore", "Collect workflow documentation");
  nfcore->add_option("--dir", o.dir, "Documentation tree")->required();
  nfcore->add_option("--out", o.out, "JSON-lines output");

  auto* onto = ingest_cmd->add_subcommand("ontology", "Convert OBO/JSON ontology to JSON-LD");
  onto->add_option("--input", o.input, ".obo or .json ontology")->required();
  onto->add_option("--name", o.ontology_name, "Ontology name");
  onto->add_flag("--strict", o.strict, "Abort on malformed stanzas");
  onto->add_flag("--keep-obsolete", o.keep_obsolete, "Keep obsolete terms");
  onto->add_option("--out", o.out, "JSON-LD output");

  auto* index_cmd = app.add_subcommand("index", "Build or inspect the retrieval index");
  index_cmd->require_subcommand(1);
  auto* build = index_cmd->add_subcommand("build", "Chunk, embed and persist a corpus");
  build->add_option("--corpus", o.corpus, "Directories, .jsonl docs or ontology files");
  build->add_option("--max-chars", o.max_chars, "Chunk size in characters");
  build->add_option("--overlap", o.overlap, "Chunk overlap in characters");
  build->add_option("--out", o.index_path, "Index file");
  auto* stats = index_cmd->add_subcommand("stats", "Summarise an index file");
  stats->add_option("--index", o.index_path, "Index file");

  auto* dataset = app.add_subcommand("dataset", "Fine-tuning dataset");
  dataset->require_subcommand(1);
  auto* dbuild = dataset->add_subcommand("build", "Emit chat-format JSON-lines records");
  dbuild->add_option("--tools", o.tools_path, "Tools JSON from `ingest tools`");
  dbuild->add_option("--terms", o.terms, "Ontology files (.obo, .json, .jsonld)");
  dbuild->add_option("--help-fixtures", o.help_fixtures, "Fill missing help text from <tool>/<version>.txt");
  dbuild->add_option("--cap", o.cap, "Token cap per record")->check(CLI::PositiveNumber);
  dbuild->add_option("--out", o.out, "Output file");

  auto* ask_cmd = app.add_subcommand("ask", "Answer one question with the agent pipeline");
  ask_cmd->add_option("query", o.query, "Question")->required();
  ask_cmd->add_flag("--return-last", o.return_last, "Return the last round instead of the best");
  ask_cmd->add_option("--threshold", o.threshold, "Self-rating threshold (1-5)");
  ask_cmd->add_option("--max-rounds", o.max_rounds, "Round cap (1-10)");
  ask_cmd->add_option("--k", o.retrieval_k, "Retrieved chunks per query");

  auto* bench_cmd = app.add_subcommand("bench", "ROUGE benchmark over question-answer pairs");
  bench_cmd->add_option("--pairs", o.pairs, "JSON-lines pairs")->required();
  bench_cmd->add_option("--backend", o.bench_backends, "parrot, empty, or a configured backend")
      ->required();
  bench_cmd->add_option("--out", o.out, "report.json path");
  bench_cmd->add_flag("--recall", o.recall, "Report recall instead of F1");
  bench_cmd->add_option("--jobs", o.jobs, "Concurrent requests per backend");

  auto* tasks = app.add_subcommand("tasks", "Built-in evaluation tasks");
  tasks->require_subcommand(1);
  auto* tasks_run_cmd = tasks->add_subcommand("run", "Run all six tasks through the pipeline");
  tasks_run_cmd->add_option("--threshold", o.threshold, "Self-rating threshold (1-5)");
  tasks_run_cmd->add_option("--max-rounds", o.max_rounds, "Round cap (1-10)");
  auto* tasks_list_cmd = tasks->add_subcommand("list", "Print the task prompts");

  auto* rubric_cmd = app.add_subcommand("rubric", "Aggregate human rubric scores");
  rubric_cmd->add_option("--scores", o.scores, "CSV of rubric scores")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", o.host, "Bind address");
  serve_cmd->add_option("--port", o.port, "Port");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    if (biostars->parsed()) return ingest_biostars(o, out, err);
    if (tools->parsed()) return ingest_tools(o, out, err);
    if (nfcore->parsed()) return ingest_nfcore_cmd(o, out, err);
    if (onto->parsed()) return ingest_ontology(o, out, err);
    if (build->parsed()) return index_build(o, out, err);
    if (stats->parsed()) return index_stats(o, out, err);
    if (dbuild->parsed()) return dataset_build(o, out, err);
    if (ask_cmd->parsed()) return ask(o, out, err);
    if (bench_cmd->parsed()) return bench(o, out, err);
    if (tasks_run_cmd->parsed()) return tasks_run(o, out, err);
    if (tasks_list_cmd->parsed()) return tasks_list(out);
    if (rubric_cmd->parsed()) return rubric(o, out, err);
    if (serve_cmd->parsed()) return serve(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace bioagents::app
