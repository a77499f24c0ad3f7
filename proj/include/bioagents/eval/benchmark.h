#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "bioagents/eval/rouge.h"
#include "bioagents/gateway.h"
#include "bioagents/ingest.h"

namespace bioagents::eval {

enum class ReportMetric { kF1, kRecall };

struct BenchRow {
  std::string name;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double rougeLsum = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  // False once more than 20% of pairs were skipped.
  bool valid = true;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t pair_count = 0;
  std::string qa_source;
  ReportMetric metric = ReportMetric::kF1;
};

struct NamedBackend {
  std::string name;
  gateway::ChatBackend* backend = nullptr;
};

struct BenchOptions {
  ReportMetric metric = ReportMetric::kF1;
  std::string qa_source;
  std::size_t jobs = 1;
};

// Title and body, separated by a blank line.
std::string benchmark_query(const ingest::QARecord& pair);
std::vector<gateway::ChatMessage> benchmark_prompt(const ingest::QARecord& pair);

BenchReport run_benchmark(const std::vector<NamedBackend>& backends,
                          const std::vector<ingest::QARecord>& pairs,
                          const gateway::GenConfig& gen, const BenchOptions& options = {});

// Columns follow the published layout: Model, ROUGE-1, ROUGE-2, ROUGE-L,
// ROUGE-L-SUM, three decimals.
std::string render_table(const BenchReport& report);
std::string report_to_json(const BenchReport& report);
BenchReport report_from_json(const std::string& text);

// Replies with the reference answer of the pair whose query it receives.
class ParrotBackend : public gateway::ChatBackend {
 public:
  explicit ParrotBackend(const std::vector<ingest::QARecord>& pairs);
  std::string complete(std::span<const gateway::ChatMessage> messages,
                       const gateway::GenConfig& config) override;
  std::size_t attempts() const override { return attempts_.load(); }

 private:
  std::map<std::string, std::string> answers_;
  std::atomic<std::size_t> attempts_{0};
};

class EmptyBackend : public gateway::ChatBackend {
 public:
  std::string complete(std::span<const gateway::ChatMessage>,
                       const gateway::GenConfig&) override {
    ++attempts_;
    return {};
  }
  std::size_t attempts() const override { return attempts_.load(); }

 private:
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace bioagents::eval
