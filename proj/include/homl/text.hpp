#pragma once

// Line-oriented reader shared by the category, presheaf, frame and model
// document formats.  A document is a sequence of blocks:
//
//   <kind> <header tokens...>
//     <body lines>
//   end
//
// plus top-level `include "path"` lines.  `#` starts a comment.  Within a
// line, tokens are separated by whitespace; `:`, `=`, `@` and `->` are always
// tokens of their own.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace homl::text {

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
  std::string raw;  // comment-stripped source text
};

struct Block {
  std::string kind;
  std::vector<std::string> header;
  std::vector<Line> body;
  int line = 0;
  std::string origin;  // file the block came from (empty for in-memory text)
};

inline std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      flush();
    } else if (c == ':' || c == '=' || c == '@') {
      flush();
      out.emplace_back(1, c);
    } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
      flush();
      out.emplace_back("->");
      ++i;
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline std::string where(const std::string& origin, int line) {
  return (origin.empty() ? std::string("line ") : origin + ":") +
         std::to_string(line);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::InvalidInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string dirname_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string() : path.substr(0, pos + 1);
}

/// Splits a document into blocks.  Includes are resolved relative to the
/// including file; every file is read at most once.
inline void read_blocks(const std::string& src, const std::string& origin,
                        std::vector<Block>& out,
                        std::vector<std::string>& seen) {
  std::istringstream in(src);
  std::string raw;
  int number = 0;
  bool open = false;
  std::vector<Block> local;
  while (std::getline(in, raw)) {
    ++number;
    std::string body = strip_comment(raw);
    auto toks = tokenize(body);
    if (toks.empty()) continue;
    if (!open) {
      if (toks[0] == "include") {
        auto q1 = body.find('"');
        auto q2 = body.rfind('"');
        if (q1 == std::string::npos || q2 == q1)
          fail(Errc::ParseError, where(origin, number) + ": include needs a quoted path");
        std::string path = dirname_of(origin) + body.substr(q1 + 1, q2 - q1 - 1);
        bool done = false;
        for (auto& s : seen) done = done || s == path;
        if (!done) {
          seen.push_back(path);
          for (auto& b : local) out.push_back(std::move(b));
          local.clear();
          read_blocks(read_file(path), path, out, seen);
        }
        continue;
      }
      local.push_back(Block{toks[0], {toks.begin() + 1, toks.end()}, {}, number, origin});
      open = true;
      continue;
    }
    if (toks.size() == 1 && toks[0] == "end") {
      open = false;
      continue;
    }
    local.back().body.push_back(Line{number, toks, body});
  }
  if (open)
    fail(Errc::ParseError, where(origin, local.back().line) + ": block '" +
                               local.back().kind + "' is missing 'end'");
  for (auto& b : local) out.push_back(std::move(b));
}

inline std::vector<Block> parse_blocks(const std::string& src,
                                       const std::string& origin = "") {
  std::vector<Block> out;
  std::vector<std::string> seen;
  if (!origin.empty()) seen.push_back(origin);
  read_blocks(src, origin, out, seen);
  return out;
}

inline std::vector<Block> load_blocks(const std::string& path) {
  return parse_blocks(read_file(path), path);
}

[[noreturn]] inline void bad_line(const Block& b, const Line& l, const std::string& why) {
  fail(Errc::ParseError, where(b.origin, l.number) + ": " + why);
}

inline void expect(const Block& b, const Line& l, std::size_t i, const char* tok) {
  if (i >= l.tokens.size() || l.tokens[i] != tok)
    bad_line(b, l, std::string("expected '") + tok + "'");
}

}  // namespace homl::text
