#include "pds/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>

#include "pds/errors.hpp"

namespace pds::eval {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void erase_all(std::string& s, std::string_view what) {
  for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos)) {
    s.erase(pos, what.size());
  }
}

std::optional<double> as_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::fixed);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
  std::string out(trim(answer));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::string_view sym : {",", "$", "\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"}) {
    erase_all(out, sym);
  }
  return std::string(trim(out));
}

bool answers_match(std::string_view prediction, std::string_view gold) {
  const std::string p = normalize_answer(prediction);
  const std::string g = normalize_answer(gold);
  const auto pn = as_decimal(p);
  const auto gn = as_decimal(g);
  if (pn && gn) {
    return *pn == *gn;
  }
  return p == g;
}

std::string extract_answer(std::string_view completion) {
  constexpr std::string_view kMarker = "Answer:";
  if (const std::size_t pos = completion.rfind(kMarker); pos != std::string_view::npos) {
    std::string_view rest = completion.substr(pos + kMarker.size());
    rest = rest.substr(0, rest.find('\n'));
    return std::string(trim(rest));
  }
  std::string_view last;
  while (!completion.empty()) {
    const std::size_t nl = completion.find('\n');
    const std::string_view line = trim(completion.substr(0, nl));
    if (!line.empty()) last = line;
    if (nl == std::string_view::npos) break;
    completion.remove_prefix(nl + 1);
  }
  return std::string(last);
}

std::size_t count_correct(std::span<const std::string> predictions, std::span<const std::string> gold) {
  if (predictions.size() != gold.size()) {
    throw DataError("predictions (" + std::to_string(predictions.size()) + ") and gold (" +
                    std::to_string(gold.size()) + ") differ in length");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (answers_match(predictions[i], gold[i])) ++correct;
  }
  return correct;
}

double accuracy_at_1(std::span<const std::string> predictions, std::span<const std::string> gold) {
  const std::size_t correct = count_correct(predictions, gold);
  if (predictions.empty()) return 0.0;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

TokenStats token_stats(std::span<const long long> lengths) {
  if (lengths.empty()) {
    throw DataError("token statistics of an empty set");
  }
  const double n = static_cast<double>(lengths.size());
  double mean = 0.0;
  for (long long x : lengths) mean += static_cast<double>(x);
  mean /= n;
  double var = 0.0;
  for (long long x : lengths) {
    const double d = static_cast<double>(x) - mean;
    var += d * d;
  }
  return {mean, std::sqrt(var / n)};
}

std::string format_token_stats_row(std::string_view prompt_type, std::string_view method, TokenStats stats) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10.*s | %-12.*s | %10.2f | %10.2f", static_cast<int>(prompt_type.size()),
                prompt_type.data(), static_cast<int>(method.size()), method.data(), stats.mean, stats.std);
  return buf;
}

}  // namespace pds::eval
