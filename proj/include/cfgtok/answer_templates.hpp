#pragma once

// Answer-template normalization and top-k template coverage, a measure of
// how repetitive an answer corpus is.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfgtok/error.hpp"

namespace cfgtok {

/// One placeholder category. A token sequence matches if it equals one of
/// the phrases (case-normalized, whitespace-separated), or, for a single
/// token, if it fully matches the pattern.
struct TemplateRule {
  std::string category;  // e.g. "[COLOR]"
  std::vector<std::vector<std::string>> phrases;
  std::optional<std::regex> pattern;
  std::string pattern_source;
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    std::size_t end = pos;
    while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end]))) ++end;
    if (end > pos) out.emplace_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

inline bool is_placeholder(std::string_view token) {
  static const std::regex re(R"(\[[A-Z][A-Z0-9_-]*\])");
  return std::regex_match(token.begin(), token.end(), re);
}

inline bool is_terminal_punct(char ch) {
  return ch == '.' || ch == ',' || ch == '!' || ch == '?' || ch == ';' || ch == ':';
}

// Splits trailing ",;:" off a token so "red," still matches "red".
inline std::pair<std::string_view, std::string_view> split_suffix(std::string_view token) {
  std::size_t end = token.size();
  while (end > 0 && (token[end - 1] == ',' || token[end - 1] == ';' || token[end - 1] == ':')) --end;
  return {token.substr(0, end), token.substr(end)};
}

}  // namespace detail

class TemplateRules {
 public:
  TemplateRules() = default;

  /// Appends a rule; application order is insertion order.
  TemplateRules& add_words(const std::string& category, const std::vector<std::string>& phrases) {
    TemplateRule rule = make_rule(category);
    for (const auto& p : phrases) {
      auto tokens = detail::split_ws(detail::ascii_lower(p));
      if (!tokens.empty()) rule.phrases.push_back(std::move(tokens));
    }
    // Longest phrase first.
    std::stable_sort(rule.phrases.begin(), rule.phrases.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    rules_.push_back(std::move(rule));
    return *this;
  }

  TemplateRules& add_pattern(const std::string& category, const std::string& pattern) {
    TemplateRule rule = make_rule(category);
    try {
      rule.pattern.emplace(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::parse_error, "bad pattern for " + category + ": " + e.what());
    }
    rule.pattern_source = pattern;
    rules_.push_back(std::move(rule));
    return *this;
  }

  std::span<const TemplateRule> rules() const noexcept { return rules_; }

  /// [COLOR] (common color words) then [NUMBER] (digits and number words).
  /// Object names are left as they are.
  static TemplateRules defaults() {
    TemplateRules r;
    r.add_words("[COLOR]", {"red", "orange", "yellow", "green", "blue", "purple", "pink", "brown", "black", "white",
                            "gray", "grey", "beige", "tan", "silver", "gold", "golden", "cyan", "violet", "navy",
                            "maroon", "teal", "cream", "dark brown", "light brown", "dark blue", "light blue",
                            "dark gray", "light gray", "dark green", "light green"});
    r.add_pattern("[NUMBER]", R"([0-9]+(\.[0-9]+)?)");
    r.add_words("[NUMBER]", {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
                             "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
                             "eighteen", "nineteen", "twenty"});
    return r;
  }

  /// Rules file: one rule per line, `[CATEGORY] words a, b, light blue` or
  /// `[CATEGORY] pattern <regex>`. Blank lines and `#` comments are skipped.
  static TemplateRules parse(std::istream& in, const std::string& source = "rules") {
    TemplateRules r;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ls(line.substr(first));
      std::string category, kind;
      ls >> category >> kind;
      std::string rest;
      std::getline(ls, rest);
      const auto b = rest.find_first_not_of(" \t");
      const auto e = rest.find_last_not_of(" \t\r");
      rest = b == std::string::npos ? std::string{} : rest.substr(b, e - b + 1);
      const std::string where = source + ":" + std::to_string(lineno);
      if (rest.empty()) throw Error(ErrorCode::parse_error, where + ": rule has no matcher");
      try {
        if (kind == "words") {
          std::vector<std::string> phrases;
          std::stringstream ws(rest);
          std::string phrase;
          while (std::getline(ws, phrase, ',')) phrases.push_back(phrase);
          r.add_words(category, phrases);
        } else if (kind == "pattern") {
          r.add_pattern(category, rest);
        } else {
          throw Error(ErrorCode::parse_error, "expected 'words' or 'pattern', got '" + kind + "'");
        }
      } catch (const Error& err) {
        throw Error(ErrorCode::parse_error, where + ": " + err.detail());
      }
    }
    return r;
  }

  static TemplateRules load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open rules file " + path);
    return parse(in, path);
  }

 private:
  static TemplateRule make_rule(const std::string& category) {
    if (!detail::is_placeholder(category)) {
      throw Error(ErrorCode::invalid_argument, "category must be an uppercase bracketed name, got '" + category + "'");
    }
    TemplateRule rule;
    rule.category = category;
    return rule;
  }

  std::vector<TemplateRule> rules_;
};

/// Lowercases (placeholders excepted), collapses whitespace, strips terminal
/// punctuation, then replaces entity mentions rule by rule.
inline std::string normalize_answer(std::string_view answer, const TemplateRules& rules) {
  std::vector<std::string> tokens = detail::split_ws(answer);
  for (auto& t : tokens) {
    if (!detail::is_placeholder(detail::split_suffix(t).first)) t = detail::ascii_lower(t);
  }
  while (!tokens.empty()) {
    std::string& last = tokens.back();
    while (!last.empty() && detail::is_terminal_punct(last.back())) last.pop_back();
    if (!last.empty()) break;
    tokens.pop_back();
  }

  for (const auto& rule : rules.rules()) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    std::size_t pos = 0;
    while (pos < tokens.size()) {
      std::size_t matched = 0;
      for (const auto& phrase : rule.phrases) {
        if (pos + phrase.size() > tokens.size()) continue;
        bool ok = true;
        for (std::size_t n = 0; n < phrase.size() && ok; ++n) {
          const auto [core, suffix] = detail::split_suffix(tokens[pos + n]);
          // Punctuation may only trail the final token of a phrase.
          ok = core == phrase[n] && (suffix.empty() || n + 1 == phrase.size());
        }
        if (ok) {
          matched = phrase.size();
          break;
        }
      }
      if (matched == 0 && rule.pattern) {
        const auto core = detail::split_suffix(tokens[pos]).first;
        if (!core.empty() && std::regex_match(core.begin(), core.end(), *rule.pattern)) matched = 1;
      }
      if (matched == 0) {
        out.push_back(tokens[pos++]);
        continue;
      }
      const auto suffix = detail::split_suffix(tokens[pos + matched - 1]).second;
      out.push_back(rule.category + std::string(suffix));
      pos += matched;
    }
    tokens = std::move(out);
  }

  std::string joined;
  for (std::size_t n = 0; n < tokens.size(); ++n) {
    if (n) joined += ' ';
    joined += tokens[n];
  }
  return joined;
}

struct TemplateReport {
  // Sorted by descending frequency, ties by template text.
  std::vector<std::pair<std::string, std::size_t>> frequencies;
  std::size_t top_k = 0;
  double coverage = 0.0;
  std::size_t corpus_size = 0;

  std::span<const std::pair<std::string, std::size_t>> top() const {
    return std::span(frequencies).first(std::min(top_k, frequencies.size()));
  }
};

inline TemplateReport top_k_coverage(std::span<const std::string> corpus, const TemplateRules& rules,
                                     std::size_t k = 15) {
  if (corpus.empty()) throw Error(ErrorCode::empty_corpus, "answer corpus is empty");
  if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& answer : corpus) ++counts[normalize_answer(answer, rules)];

  TemplateReport report;
  report.frequencies.assign(counts.begin(), counts.end());
  std::stable_sort(report.frequencies.begin(), report.frequencies.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  report.top_k = k;
  report.corpus_size = corpus.size();
  std::size_t covered = 0;
  for (const auto& [tmpl, n] : report.top()) covered += n;
  report.coverage = static_cast<double>(covered) / static_cast<double>(corpus.size());
  return report;
}

}  // namespace cfgtok
