#include "qspr/config.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <vector>

#include "qspr/data/csv.hpp"
#include "qspr/error.hpp"

namespace qspr::config {
namespace {

using Json = nlohmann::ordered_json;

class Parser {
 public:
  Parser(std::string_view text, std::string_view source) : s_(text), source_(source) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        skip_ws();
        const auto path = key_path();
        skip_ws();
        expect(']');
        table = &root;
        for (const auto& k : path) table = &descend(*table, k);
        end_of_line();
        continue;
      }
      const auto path = key_path();
      skip_ws();
      expect('=');
      skip_ws();
      Json* target = table;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) target = &descend(*target, path[i]);
      if (target->contains(path.back())) fail("duplicate key '" + path.back() + "'");
      (*target)[path.back()] = value();
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ConfigError, std::string(source_) + ":" + std::to_string(line_) + ": " + msg);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_space_and_newlines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        if (peek() == '\n') ++line_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  void skip_blank_lines() { skip_space_and_newlines(); }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    ++pos_;
    ++line_;
  }

  Json& descend(Json& table, const std::string& key) {
    if (!table.contains(key)) table[key] = Json::object();
    Json& next = table[key];
    if (!next.is_object()) fail("'" + key + "' is not a table");
    return next;
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> parts{key()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      skip_ws();
      parts.push_back(key());
      skip_ws();
    }
    return parts;
  }

  std::string key() {
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = s_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  std::string literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated string");
    return std::string(s_.substr(start, pos_++ - start));
  }

  Json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    const std::size_t start = pos_;
    while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
           peek() != '}' && peek() != '#')
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) fail("expected a value");
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "+inf" ||
                          digits == "-inf" || digits == "nan";
    if (!is_float) {
      long long v = 0;
      const char* b = digits.data() + (digits[0] == '+' ? 1 : 0);
      const auto [p, ec] = std::from_chars(b, digits.data() + digits.size(), v);
      if (ec == std::errc() && p == digits.data() + digits.size()) return v;
      fail("invalid value '" + tok + "'");
    }
    std::optional<double> v;
    try {
      v = data::parse_number(digits, source_, line_, "value");
    } catch (const Error&) {
    }
    if (!v) fail("invalid value '" + tok + "'");
    return *v;
  }

  Json array() {
    expect('[');
    Json out = Json::array();
    skip_space_and_newlines();
    while (peek() != ']') {
      out.push_back(value());
      skip_space_and_newlines();
      if (peek() == ',') {
        ++pos_;
        skip_space_and_newlines();
      } else if (peek() != ']') {
        fail("expected ',' or ']'");
      }
    }
    ++pos_;
    return out;
  }

  Json inline_table() {
    expect('{');
    Json out = Json::object();
    skip_ws();
    while (peek() != '}') {
      const auto path = key_path();
      skip_ws();
      expect('=');
      skip_ws();
      Json* target = &out;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) target = &descend(*target, path[i]);
      (*target)[path.back()] = value();
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    ++pos_;
    return out;
  }

  std::string_view s_;
  std::string_view source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

nlohmann::ordered_json parse_toml(std::string_view text, std::string_view source) {
  return Parser(text, source).parse();
}

nlohmann::ordered_json load_toml(const std::filesystem::path& path) {
  return parse_toml(data::read_text(path), path.string());
}

}  // namespace qspr::config
