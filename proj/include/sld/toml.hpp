// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sld/errors.hpp"

// Minimal strict TOML subset, enough for the run-config schema: [section]
// headers, bare keys, strings, integers, floats, booleans and (nested)
// arrays that may span lines. Unknown syntax is a hard error; schema-level
// unknown-key checks live in config.hpp.

namespace sld::toml {

struct value;
using array = std::vector<value>;

struct value {
  std::variant<std::int64_t, double, bool, std::string, array> data;
  int line = 0;

  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_float() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<array>(data); }

  std::int64_t as_int(const std::string& key) const {
    if (!is_int()) throw config_error(key + ": expected an integer (line " + std::to_string(line) + ")");
    return std::get<std::int64_t>(data);
  }
  double as_double(const std::string& key) const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(data));
    if (!is_float()) throw config_error(key + ": expected a number (line " + std::to_string(line) + ")");
    return std::get<double>(data);
  }
  bool as_bool(const std::string& key) const {
    if (!is_bool()) throw config_error(key + ": expected a boolean (line " + std::to_string(line) + ")");
    return std::get<bool>(data);
  }
  const std::string& as_string(const std::string& key) const {
    if (!is_string()) throw config_error(key + ": expected a string (line " + std::to_string(line) + ")");
    return std::get<std::string>(data);
  }
  const array& as_array(const std::string& key) const {
    if (!is_array()) throw config_error(key + ": expected an array (line " + std::to_string(line) + ")");
    return std::get<array>(data);
  }
};

/// section name ("" for root keys) -> key -> value
using table = std::map<std::string, std::map<std::string, value>>;

namespace detail {

struct cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char next() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw config_error("toml: " + msg + " (line " + std::to_string(line) + ")");
  }

  void skip_ws_inline() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) next();
  }
  // Skips spaces, comments and newlines (used inside arrays).
  void skip_ws_any() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        next();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') next();
      } else {
        break;
      }
    }
  }
};

inline bool is_bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

inline std::string parse_bare(cursor& cur, const char* what) {
  std::string out;
  while (!cur.eof() && is_bare_char(cur.peek())) out.push_back(cur.next());
  if (out.empty()) cur.fail(std::string("expected ") + what);
  return out;
}

inline std::string parse_string(cursor& cur) {
  cur.next();  // opening quote
  std::string out;
  while (true) {
    if (cur.eof()) cur.fail("unterminated string");
    char c = cur.next();
    if (c == '"') break;
    if (c == '\n') cur.fail("newline in string");
    if (c == '\\') {
      if (cur.eof()) cur.fail("dangling escape");
      const char e = cur.next();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: cur.fail(std::string("unsupported escape \\") + e);
      }
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline value parse_value(cursor& cur);

inline value parse_array(cursor& cur) {
  value v;
  v.line = cur.line;
  cur.next();  // '['
  array items;
  while (true) {
    cur.skip_ws_any();
    if (cur.eof()) cur.fail("unterminated array");
    if (cur.peek() == ']') {
      cur.next();
      break;
    }
    items.push_back(parse_value(cur));
    cur.skip_ws_any();
    if (cur.eof()) cur.fail("unterminated array");
    if (cur.peek() == ',') {
      cur.next();
    } else if (cur.peek() != ']') {
      cur.fail("expected ',' or ']' in array");
    }
  }
  v.data = std::move(items);
  return v;
}

inline value parse_scalar(cursor& cur) {
  value v;
  v.line = cur.line;
  std::string tok;
  while (!cur.eof()) {
    const char c = cur.peek();
    if (c == ',' || c == ']' || c == '#' || c == '\n' || c == '\r' || c == ' ' || c == '\t') break;
    tok.push_back(cur.next());
  }
  if (tok.empty()) cur.fail("expected a value");
  if (tok == "true") { v.data = true; return v; }
  if (tok == "false") { v.data = false; return v; }

  const bool looks_int = tok.find_first_of(".eE") == std::string::npos;
  if (looks_int) {
    std::int64_t out;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec == std::errc() && p == tok.data() + tok.size()) {
      v.data = out;
      return v;
    }
  }
  double d;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
  if (ec != std::errc() || p != tok.data() + tok.size())
    cur.fail("invalid value '" + tok + "'");
  v.data = d;
  return v;
}

inline value parse_value(cursor& cur) {
  cur.skip_ws_inline();
  if (cur.eof()) cur.fail("expected a value");
  const char c = cur.peek();
  if (c == '[') return parse_array(cur);
  if (c == '"') {
    value v;
    v.line = cur.line;
    v.data = parse_string(cur);
    return v;
  }
  return parse_scalar(cur);
}

inline void expect_line_end(cursor& cur) {
  cur.skip_ws_inline();
  if (cur.eof()) return;
  if (cur.peek() == '#') {
    while (!cur.eof() && cur.peek() != '\n') cur.next();
  }
  if (!cur.eof()) {
    if (cur.peek() != '\n' && cur.peek() != '\r') cur.fail("unexpected trailing characters");
    while (!cur.eof() && (cur.peek() == '\n' || cur.peek() == '\r')) cur.next();
  }
}

}  // namespace detail

inline table parse(const std::string& text) {
  detail::cursor cur{text};
  table out;
  std::string section;
  out[section];
  while (true) {
    cur.skip_ws_any();
    if (cur.eof()) break;
    if (cur.peek() == '[') {
      cur.next();
      section = detail::parse_bare(cur, "section name");
      if (cur.eof() || cur.next() != ']') cur.fail("expected ']' after section name");
      if (out.count(section)) cur.fail("duplicate section [" + section + "]");
      out[section];
      detail::expect_line_end(cur);
      continue;
    }
    const int key_line = cur.line;
    const std::string key = detail::parse_bare(cur, "key");
    cur.skip_ws_inline();
    if (cur.eof() || cur.next() != '=') {
      throw config_error("toml: expected '=' after key '" + key + "' (line " +
                         std::to_string(key_line) + ")");
    }
    value v = detail::parse_value(cur);
    detail::expect_line_end(cur);
    if (out[section].count(key))
      throw config_error("toml: duplicate key '" + (section.empty() ? key : section + "." + key) +
                         "' (line " + std::to_string(key_line) + ")");
    out[section].emplace(key, std::move(v));
  }
  return out;
}

inline table parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

/// Shortest round-trip float formatting with a TOML float marker.
inline std::string format_float(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, p);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

}  // namespace sld::toml
