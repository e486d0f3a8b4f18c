#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bo4io/common.hpp"

namespace bo4io {

/// Shortest text that parses back to exactly `v` ("inf"/"-inf"/"nan" for non-finite values).
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, std::string_view context) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InputError(std::string(context) + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

/// Line-oriented key/value document with a versioned magic header:
///
///     bo4io-fop v1
///     # comment
///     key value value ...
///
/// Keys may repeat (table rows). Tokens are whitespace separated.
class TextDocument {
 public:
  struct Line {
    std::string key;
    std::vector<std::string> values;
    int line_no = 0;
  };

  TextDocument() = default;
  explicit TextDocument(std::string magic) : magic_(std::move(magic)) {}

  static TextDocument parse(std::istream& in, std::string_view expected_magic, std::string origin = "<input>") {
    TextDocument doc;
    doc.origin_ = std::move(origin);
    std::string raw;
    int line_no = 0;
    bool have_magic = false;
    while (std::getline(in, raw)) {
      ++line_no;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      std::istringstream ls(raw);
      std::vector<std::string> tokens;
      for (std::string tok; ls >> tok;) tokens.push_back(tok);
      if (tokens.empty()) continue;
      if (!have_magic) {
        doc.magic_ = tokens[0] + (tokens.size() > 1 ? " " + tokens[1] : "");
        if (!expected_magic.empty() && doc.magic_ != expected_magic)
          throw InputError(doc.origin_ + ":" + std::to_string(line_no) + ": expected header '" +
                           std::string(expected_magic) + "', got '" + doc.magic_ + "'");
        have_magic = true;
        continue;
      }
      Line l;
      l.key = tokens[0];
      l.values.assign(tokens.begin() + 1, tokens.end());
      l.line_no = line_no;
      doc.lines_.push_back(std::move(l));
    }
    if (!have_magic) throw InputError(doc.origin_ + ": empty document (missing header line)");
    return doc;
  }

  static TextDocument parse_string(const std::string& text, std::string_view expected_magic,
                                   std::string origin = "<string>") {
    std::istringstream in(text);
    return parse(in, expected_magic, std::move(origin));
  }

  static TextDocument load(const std::string& path, std::string_view expected_magic) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse(in, expected_magic, path);
  }

  const std::string& magic() const noexcept { return magic_; }
  const std::string& origin() const noexcept { return origin_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }

  bool has(std::string_view key) const { return first(key) != nullptr; }

  const Line* first(std::string_view key) const {
    for (const auto& l : lines_)
      if (l.key == key) return &l;
    return nullptr;
  }

  std::vector<const Line*> all(std::string_view key) const {
    std::vector<const Line*> out;
    for (const auto& l : lines_)
      if (l.key == key) out.push_back(&l);
    return out;
  }

  const Line& require(std::string_view key) const {
    const Line* l = first(key);
    if (!l) throw InputError(origin_ + ": missing required key '" + std::string(key) + "'");
    return *l;
  }

  std::string string(std::string_view key) const {
    const auto& l = require(key);
    if (l.values.size() != 1) throw InputError(where(l) + ": '" + l.key + "' expects one value");
    return l.values[0];
  }

  std::string string_or(std::string_view key, std::string fallback) const {
    return has(key) ? string(key) : fallback;
  }

  std::vector<std::string> strings(std::string_view key) const { return require(key).values; }

  double number(std::string_view key) const {
    const auto& l = require(key);
    if (l.values.size() != 1) throw InputError(where(l) + ": '" + l.key + "' expects one value");
    return parse_number(l.values[0], where(l));
  }

  double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

  Vector numbers(std::string_view key) const { return numbers_of(require(key)); }

  Vector numbers_of(const Line& l, std::size_t skip = 0) const {
    Vector v(static_cast<Eigen::Index>(l.values.size() - std::min(skip, l.values.size())));
    for (std::size_t i = skip; i < l.values.size(); ++i)
      v[static_cast<Eigen::Index>(i - skip)] = parse_number(l.values[i], where(l));
    return v;
  }

  std::string where(const Line& l) const { return origin_ + ":" + std::to_string(l.line_no); }

  // Writing.
  void add(std::string key, std::vector<std::string> values) {
    lines_.push_back(Line{std::move(key), std::move(values), 0});
  }
  void add(std::string key, std::initializer_list<std::string> values) {
    add(std::move(key), std::vector<std::string>(values));
  }
  void add(std::string key, const std::string& value) { add(std::move(key), std::vector<std::string>{value}); }
  void add(std::string key, double value) { add(std::move(key), std::vector<std::string>{format_number(value)}); }
  void add(std::string key, std::vector<std::string> prefix, const Vector& values) {
    for (Eigen::Index i = 0; i < values.size(); ++i) prefix.push_back(format_number(values[i]));
    add(std::move(key), std::move(prefix));
  }

  std::string serialize() const {
    std::string out = magic_ + "\n";
    for (const auto& l : lines_) {
      out += l.key;
      for (const auto& v : l.values) out += " " + v;
      out += "\n";
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << serialize();
    if (!out) throw IoError("write failed for '" + path + "'");
  }

 private:
  std::string magic_;
  std::string origin_ = "<document>";
  std::vector<Line> lines_;
};

}  // namespace bo4io
