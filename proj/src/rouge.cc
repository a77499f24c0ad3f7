#include "bioagents/eval/rouge.h"
#include "bioagents/text.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>

#include "bioagents/error.h"

namespace bioagents::eval {

RougeScore make_score(double precision, double recall) {
  RougeScore s{precision, recall, 0.0};
  if (precision + recall > 0.0) s.f1 = 2.0 * precision * recall / (precision + recall);
  return s;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!tokenize(cur).empty()) out.emplace_back(trim(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    cur.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) {
        cur.push_back(text[j]);
        ++j;
      }
      if (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) {
        flush();
      }
      i = j - 1;
    }
  }
  flush();
  return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
    }
    std::swap(prev, row);
  }
  return prev[b.size()];
}

namespace {

std::map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens, int n,
                                                std::size_t* total) {
  std::map<std::string, std::size_t> counts;
  *total = 0;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) key += '\x1f' + tokens[i + k];
    ++counts[key];
    ++*total;
  }
  return counts;
}

// Reference-token positions that lie on one LCS path between ref and cand.
std::vector<std::size_t> lcs_positions(const std::vector<std::string>& ref,
                                       const std::vector<std::string>& cand) {
  const std::size_t n = ref.size(), m = cand.size();
  std::vector<std::vector<std::size_t>> t(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      t[i][j] = ref[i - 1] == cand[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  std::vector<std::size_t> hits;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (ref[i - 1] == cand[j - 1]) {
      hits.push_back(i - 1);
      --i;
      --j;
    } else if (t[i - 1][j] >= t[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(hits.begin(), hits.end());
  return hits;
}

}  // namespace

RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n) {
  if (n != 1 && n != 2) throw Error(ErrorCode::kInvalidArgument, "rouge_n supports n = 1 or 2");
  std::size_t cand_total = 0, ref_total = 0;
  auto cand = ngram_counts(tokenize(candidate), n, &cand_total);
  auto ref = ngram_counts(tokenize(reference), n, &ref_total);
  std::size_t matches = 0;
  for (const auto& [gram, count] : cand) {
    if (auto it = ref.find(gram); it != ref.end()) matches += std::min(count, it->second);
  }
  const double p = cand_total ? static_cast<double>(matches) / cand_total : 0.0;
  const double r = ref_total ? static_cast<double>(matches) / ref_total : 0.0;
  return make_score(p, r);
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  auto cand = tokenize(candidate);
  auto ref = tokenize(reference);
  const auto l = static_cast<double>(lcs_length(cand, ref));
  const double p = cand.empty() ? 0.0 : l / cand.size();
  const double r = ref.empty() ? 0.0 : l / ref.size();
  return make_score(p, r);
}

RougeScore rouge_lsum(std::string_view candidate, std::string_view reference) {
  std::vector<std::vector<std::string>> cand_sents, ref_sents;
  for (const auto& s : split_sentences(candidate)) cand_sents.push_back(tokenize(s));
  for (const auto& s : split_sentences(reference)) ref_sents.push_back(tokenize(s));

  std::map<std::string, std::size_t> cand_counts, ref_counts;
  std::size_t cand_total = 0, ref_total = 0;
  for (const auto& s : cand_sents) {
    for (const auto& t : s) ++cand_counts[t];
    cand_total += s.size();
  }
  for (const auto& s : ref_sents) {
    for (const auto& t : s) ++ref_counts[t];
    ref_total += s.size();
  }
  if (cand_total == 0 || ref_total == 0) return {};

  std::size_t hits = 0;
  for (const auto& ref : ref_sents) {
    std::set<std::size_t> uni;
    for (const auto& cand : cand_sents) {
      for (auto pos : lcs_positions(ref, cand)) uni.insert(pos);
    }
    for (auto pos : uni) {
      const auto& token = ref[pos];
      if (cand_counts[token] > 0 && ref_counts[token] > 0) {
        ++hits;
        --cand_counts[token];
        --ref_counts[token];
      }
    }
  }
  return make_score(static_cast<double>(hits) / cand_total, static_cast<double>(hits) / ref_total);
}

RougeSet score_all(std::string_view candidate, std::string_view reference) {
  return RougeSet{rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2),
                  rouge_l(candidate, reference), rouge_lsum(candidate, reference)};
}

}  // namespace bioagents::eval
