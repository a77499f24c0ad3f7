#include "bioagents/eval/benchmark.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bioagents/error.h"

namespace bioagents::eval {

using nlohmann::json;

namespace {

constexpr double kMaxSkipFraction = 0.2;

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double pick(const RougeScore& s, ReportMetric metric) {
  return metric == ReportMetric::kF1 ? s.f1 : s.recall;
}

}  // namespace

std::string benchmark_query(const ingest::QARecord& pair) {
  if (pair.body.empty()) return pair.title;
  return pair.title + "\n\n" + pair.body;
}

std::vector<gateway::ChatMessage> benchmark_prompt(const ingest::QARecord& pair) {
  return {{gateway::Role::kSystem,
           "You are an experienced bioinformatician answering a question from a community forum."},
          {gateway::Role::kUser, benchmark_query(pair)}};
}

BenchReport run_benchmark(const std::vector<NamedBackend>& backends,
                          const std::vector<ingest::QARecord>& pairs,
                          const gateway::GenConfig& gen, const BenchOptions& options) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "benchmark needs at least one pair");
  for (const auto& p : pairs) ingest::reference_answer(p);

  BenchReport report;
  report.pair_count = pairs.size();
  report.qa_source = options.qa_source;
  report.metric = options.metric;

  for (const auto& named : backends) {
    if (!named.backend) throw Error(ErrorCode::kInvalidArgument, "backend " + named.name + " is null");
    std::vector<std::optional<RougeSet>> scores(pairs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < pairs.size(); i = next++) {
        try {
          auto candidate = named.backend->complete(benchmark_prompt(pairs[i]), gen);
          scores[i] = score_all(candidate, ingest::reference_answer(pairs[i]).text);
        } catch (const Error& e) {
          spdlog::warn("bench {}: pair {} skipped: {}", named.name, pairs[i].id, e.what());
        }
      }
    };
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, pairs.size());
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }

    BenchRow row;
    row.name = named.name;
    for (const auto& s : scores) {
      if (!s) {
        ++row.skipped;
        continue;
      }
      ++row.scored;
      row.rouge1 += pick(s->rouge1, options.metric);
      row.rouge2 += pick(s->rouge2, options.metric);
      row.rougeL += pick(s->rougeL, options.metric);
      row.rougeLsum += pick(s->rougeLsum, options.metric);
    }
    if (row.scored > 0) {
      const double n = static_cast<double>(row.scored);
      row.rouge1 /= n;
      row.rouge2 /= n;
      row.rougeL /= n;
      row.rougeLsum /= n;
    }
    row.valid = static_cast<double>(row.skipped) <= kMaxSkipFraction * pairs.size();
    report.rows.push_back(row);
  }
  return report;
}

std::string render_table(const BenchReport& report) {
  const std::string suffix = report.metric == ReportMetric::kF1 ? "/F1" : "/R";
  const std::vector<std::string> headers = {"Model", "ROUGE-1" + suffix, "ROUGE-2" + suffix,
                                            "ROUGE-L" + suffix, "ROUGE-L-SUM" + suffix};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : report.rows) {
    cells.push_back({r.name, fixed3(r.rouge1), fixed3(r.rouge2), fixed3(r.rougeL),
                     fixed3(r.rougeLsum)});
  }
  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  out << "Benchmarking on " << report.pair_count << " question-answer pairs";
  if (!report.qa_source.empty()) out << " (" << report.qa_source << ")";
  out << "\n";
  auto line = [&](const std::vector<std::string>& row) {
    std::string s = row[0] + std::string(width[0] - row[0].size(), ' ');
    for (std::size_t c = 1; c < row.size(); ++c) {
      s += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
    }
    return s;
  };
  out << line(headers) << "\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out << line(cells[i]);
    const auto& r = report.rows[i];
    if (!r.valid) out << "  [invalid: " << r.skipped << " skipped]";
    out << "\n";
  }
  return out.str();
}

std::string report_to_json(const BenchReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"name", r.name},
                    {"rouge1", r.rouge1},
                    {"rouge2", r.rouge2},
                    {"rougeL", r.rougeL},
                    {"rougeLsum", r.rougeLsum},
                    {"scored", r.scored},
                    {"skipped", r.skipped},
                    {"valid", r.valid}});
  }
  json doc = {{"metric", report.metric == ReportMetric::kF1 ? "f1" : "recall"},
              {"pair_count", report.pair_count},
              {"qa_source", report.qa_source},
              {"rows", rows}};
  return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

BenchReport report_from_json(const std::string& text) {
  try {
    json doc = json::parse(text);
    BenchReport report;
    report.metric = doc.value("metric", "f1") == "recall" ? ReportMetric::kRecall : ReportMetric::kF1;
    report.pair_count = doc.at("pair_count").get<std::size_t>();
    report.qa_source = doc.value("qa_source", "");
    for (const auto& r : doc.at("rows")) {
      BenchRow row;
      row.name = r.at("name").get<std::string>();
      row.rouge1 = r.at("rouge1").get<double>();
      row.rouge2 = r.at("rouge2").get<double>();
      row.rougeL = r.at("rougeL").get<double>();
      row.rougeLsum = r.at("rougeLsum").get<double>();
      row.scored = r.value("scored", std::size_t{0});
      row.skipped = r.value("skipped", std::size_t{0});
      row.valid = r.value("valid", true);
      report.rows.push_back(std::move(row));
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed report: ") + e.what());
  }
}

ParrotBackend::ParrotBackend(const std::vector<ingest::QARecord>& pairs) {
  for (const auto& p : pairs) answers_[benchmark_query(p)] = ingest::reference_answer(p).text;
}

std::string ParrotBackend::complete(std::span<const gateway::ChatMessage> messages,
                                    const gateway::GenConfig&) {
  ++attempts_;
  auto it = answers_.find(messages.back().content);
  if (it == answers_.end()) throw Error(ErrorCode::kNotFound, "parrot has no answer for query");
  return it->second;
}

}  // namespace bioagents::eval
