#pragma once
// Answer normalization, Accuracy@1 and completion-length statistics.
//
// Normalization: trim, lowercase, drop thousands separators and currency
// signs. Two answers that both parse as decimals compare numerically.

#include <span>
#include <string>
#include <string_view>

namespace pds::eval {

std::string normalize_answer(std::string_view answer);
bool answers_match(std::string_view prediction, std::string_view gold);

// Text after the last "Answer:" marker (first line of it), else the last
// nonempty line.
std::string extract_answer(std::string_view completion);

// Throws DataError when the lengths differ. Empty input scores 0.
double accuracy_at_1(std::span<const std::string> predictions, std::span<const std::string> gold);
std::size_t count_correct(std::span<const std::string> predictions, std::span<const std::string> gold);

struct TokenStats {
  double mean = 0.0;
  // Population standard deviation.
  double std = 0.0;
};

// Throws DataError on empty input.
TokenStats token_stats(std::span<const long long> lengths);

// "<prompt type> | <method> | <avg> | <std>" with two decimals, column-aligned.
std::string format_token_stats_row(std::string_view prompt_type, std::string_view method, TokenStats stats);

}  // namespace pds::eval
