#include "kres/public_suffix.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "psl_data.inc"

namespace kres {

namespace {

std::vector<std::string_view> split_labels(std::string_view name) {
  std::vector<std::string_view> labels;
  std::size_t start = 0;
  while (start <= name.size()) {
    std::size_t dot = name.find('.', start);
    if (dot == std::string_view::npos) {
      labels.push_back(name.substr(start));
      break;
    }
    labels.push_back(name.substr(start, dot - start));
    start = dot + 1;
  }
  return labels;
}

std::string join_labels(const std::vector<std::string_view>& labels, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < labels.size(); ++i) {
    if (i > from) out.push_back('.');
    out.append(labels[i]);
  }
  return out;
}

}  // namespace

SuffixRules SuffixRules::from_string(std::string_view text) {
  SuffixRules rules;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line =
        eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

    // rule ends at the first whitespace
    std::size_t end = line.find_first_of(" \t\r");
    if (end != std::string_view::npos) line = line.substr(0, end);
    if (line.empty() || line.substr(0, 2) == "//") continue;

    std::string rule(line);
    std::transform(rule.begin(), rule.end(), rule.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (rule[0] == '!') {
      rules.exception_.insert(rule.substr(1));
    } else if (rule.size() > 2 && rule[0] == '*' && rule[1] == '.') {
      rules.wildcard_.insert(rule.substr(2));
    } else {
      rules.exact_.insert(rule);
    }
  }
  return rules;
}

SuffixRules SuffixRules::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw std::runtime_error("cannot open public suffix list: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

const SuffixRules& SuffixRules::bundled() {
  static const SuffixRules rules = from_string(kBundledSuffixRules);
  return rules;
}

std::string SuffixRules::registrable_domain(std::string_view name) const {
  if (name.empty()) return std::string(name);
  auto labels = split_labels(name);
  const std::size_t n = labels.size();

  // Collect the prevailing rule: exceptions win outright, otherwise the
  // match with the most labels; the implicit "*" rule covers everything
  // else with one label.
  std::size_t suffix_labels = 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::string suffix = join_labels({labels.begin(), labels.end()}, i);
    if (exception_.count(suffix)) {
      // The matching suffix is the exception rule minus its leftmost label.
      suffix_labels = n - i - 1;
      break;
    }
    if (exact_.count(suffix)) {
      suffix_labels = std::max(suffix_labels, n - i);
    }
    if (i + 1 < n) {
      std::string base = join_labels({labels.begin(), labels.end()}, i + 1);
      if (wildcard_.count(base)) {
        suffix_labels = std::max(suffix_labels, n - i);
      }
    }
  }

  if (n <= suffix_labels) return std::string(name);
  return join_labels({labels.begin(), labels.end()}, n - suffix_labels - 1);
}

bool SuffixRules::is_public_suffix(std::string_view name) const {
  if (name.empty()) return false;
  // name is a suffix exactly when one extra label survives reduction whole.
  std::string probe = "x." + std::string(name);
  return registrable_domain(probe) == probe;
}

}  // namespace kres
