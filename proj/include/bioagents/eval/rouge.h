#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bioagents::eval {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 2pr/(p+r), or 0 when p + r == 0.
RougeScore make_score(double precision, double recall);

// Lowercase, split on runs of non-alphanumeric ASCII characters, no stemming.
std::vector<std::string> tokenize(std::string_view text);

// Splits on newlines and on [.!?]+ followed by whitespace. Sentences without
// tokens are dropped.
std::vector<std::string> split_sentences(std::string_view text);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n);
RougeScore rouge_l(std::string_view candidate, std::string_view reference);
// Summary-level LCS: per reference sentence, the union of LCS hits against all
// candidate sentences, with each token occurrence credited at most once.
RougeScore rouge_lsum(std::string_view candidate, std::string_view reference);

struct RougeSet {
  RougeScore rouge1;
  RougeScore rouge2;
  RougeScore rougeL;
  RougeScore rougeLsum;
};

RougeSet score_all(std::string_view candidate, std::string_view reference);

}  // namespace bioagents::eval
