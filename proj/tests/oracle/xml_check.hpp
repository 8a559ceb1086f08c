#pragma once

// Minimal XML well-formedness checker for the SVG output tests: balanced,
// properly nested tags, quoted attribute values, no stray '<'. Not a
// validator; just enough to catch malformed output.

#include <cctype>
#include <string>
#include <vector>

namespace oracle {

inline bool xml_well_formed(const std::string& s, std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::vector<std::string> stack;
  size_t i = 0;
  const size_t n = s.size();
  bool seen_root = false;
  while (i < n) {
    if (s[i] != '<') {
      if (s[i] == '>') return fail("stray '>' outside a tag");
      ++i;
      continue;
    }
    if (i + 1 >= n) return fail("dangling '<' at end");
    if (s.compare(i, 4, "<!--") == 0) {
      const size_t end = s.find("-->", i + 4);
      if (end == std::string::npos) return fail("unterminated comment");
      i = end + 3;
      continue;
    }
    if (s[i + 1] == '?') {
      const size_t end = s.find("?>", i + 2);
      if (end == std::string::npos) return fail("unterminated declaration");
      i = end + 2;
      continue;
    }
    const bool closing = s[i + 1] == '/';
    size_t j = i + (closing ? 2 : 1);
    size_t name_start = j;
    while (j < n && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == ':' ||
                     s[j] == '-' || s[j] == '_')) {
      ++j;
    }
    if (j == name_start) return fail("tag with empty name near offset " + std::to_string(i));
    const std::string name = s.substr(name_start, j - name_start);

    // Scan attributes until '>' while respecting quotes.
    bool self_closing = false;
    char quote = 0;
    while (j < n) {
      const char ch = s[j];
      if (quote) {
        if (ch == quote) quote = 0;
        ++j;
        continue;
      }
      if (ch == '"' || ch == '\'') {
        quote = ch;
        ++j;
        continue;
      }
      if (ch == '=') {
        // Attribute values must be quoted.
        size_t k = j + 1;
        while (k < n && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
        if (k >= n || (s[k] != '"' && s[k] != '\'')) {
          return fail("unquoted attribute value in <" + name + ">");
        }
        j = k;
        continue;
      }
      if (ch == '<') return fail("'<' inside tag <" + name + ">");
      if (ch == '/' && j + 1 < n && s[j + 1] == '>') {
        self_closing = true;
        j += 2;
        break;
      }
      if (ch == '>') {
        ++j;
        break;
      }
      ++j;
    }
    if (quote) return fail("unterminated quote in <" + name + ">");
    if (j > n || (j == n && s[n - 1] != '>')) {
      if (!self_closing) return fail("unterminated tag <" + name + ">");
    }

    if (closing) {
      if (self_closing) return fail("closing tag cannot self-close: " + name);
      if (stack.empty()) return fail("closing </" + name + "> with nothing open");
      if (stack.back() != name) {
        return fail("mismatched </" + name + ">, expected </" + stack.back() + ">");
      }
      stack.pop_back();
    } else if (!self_closing) {
      if (stack.empty() && seen_root) return fail("content after the root element");
      stack.push_back(name);
      seen_root = true;
    } else if (stack.empty()) {
      if (seen_root) return fail("content after the root element");
      seen_root = true;
    }
    i = j;
  }
  if (!stack.empty()) return fail("unclosed <" + stack.back() + ">");
  if (!seen_root) return fail("no root element");
  return true;
}

}  // namespace oracle
