// SPDX-License-Identifier: Apache-2.0
#include "thermoloop/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string_view>

#include "thermoloop/csv.hpp"
#include "thermoloop/error.hpp"

namespace thermoloop {
namespace {

constexpr std::string_view kMagic = "thermoloop-pigru";
constexpr int kVersion = 1;

void put_hex(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  out += buf;
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::vector<std::string> next(std::string_view what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      std::vector<std::string> tokens;
      std::istringstream ls(line);
      for (std::string t; ls >> t;) tokens.push_back(t);
      return tokens;
    }
    throw ParseError("checkpoint ended early, expected " + std::string(what), line_no_ + 1);
  }

  std::size_t line() const { return line_no_; }

 private:
  std::istringstream in_;
  std::size_t line_no_ = 0;
};

double parse_hex(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ParseError("bad number '" + s + "'", line);
  return v;
}

std::size_t parse_size(const std::string& s, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s.front() == '-') throw ParseError("bad size '" + s + "'", line);
  return static_cast<std::size_t>(v);
}

void expect(const std::vector<std::string>& tokens, std::string_view key, std::size_t count,
            std::size_t line) {
  if (tokens.empty() || tokens.front() != key || tokens.size() != count + 1)
    throw ParseError("expected '" + std::string(key) + "' with " + std::to_string(count) + " value(s)",
                     line);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  c.params.check(c.dims);
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  out += "dims " + std::to_string(c.dims.history_len) + " " + std::to_string(c.dims.horizon) + " " +
         std::to_string(c.dims.gru_hidden) + " " + std::to_string(c.dims.ctrl_hidden) + "\n";
  out += "normalization ";
  put_hex(out, c.normalization.temp_mean);
  out += ' ';
  put_hex(out, c.normalization.temp_std);
  out += ' ';
  put_hex(out, c.normalization.current_scale);
  out += '\n';
  c.params.for_each([&](std::string_view name, const pigru::Tensor& t) {
    out += "tensor " + std::string(name) + " " + std::to_string(t.rows) + " " + std::to_string(t.cols) + "\n";
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t col = 0; col < t.cols; ++col) {
        if (col) out += ' ';
        put_hex(out, t(r, col));
      }
      out += '\n';
    }
  });
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
  LineReader rd(text);
  auto tok = rd.next("header");
  if (tok.size() != 2 || tok[0] != kMagic) throw ParseError("not a thermoloop checkpoint", rd.line());
  if (parse_size(tok[1], rd.line()) != kVersion)
    throw ParseError("unsupported checkpoint version " + tok[1], rd.line());

  Checkpoint c;
  tok = rd.next("dims");
  expect(tok, "dims", 4, rd.line());
  c.dims = {parse_size(tok[1], rd.line()), parse_size(tok[2], rd.line()), parse_size(tok[3], rd.line()),
            parse_size(tok[4], rd.line())};
  try {
    c.dims.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), rd.line());
  }

  tok = rd.next("normalization");
  expect(tok, "normalization", 3, rd.line());
  c.normalization = {parse_hex(tok[1], rd.line()), parse_hex(tok[2], rd.line()), parse_hex(tok[3], rd.line())};
  if (!(c.normalization.temp_std > 0.0) || !(c.normalization.current_scale > 0.0))
    throw ParseError("normalization scales must be positive", rd.line());

  c.params = pigru::ModelParams::zeros(c.dims);
  c.params.for_each([&](std::string_view name, pigru::Tensor& t) {
    auto head = rd.next("tensor " + std::string(name));
    expect(head, "tensor", 3, rd.line());
    if (head[1] != name) throw ParseError("expected tensor " + std::string(name) + ", found " + head[1], rd.line());
    if (parse_size(head[2], rd.line()) != t.rows || parse_size(head[3], rd.line()) != t.cols)
      throw ParseError("tensor " + std::string(name) + " shape does not match dims", rd.line());
    for (std::size_t r = 0; r < t.rows; ++r) {
      auto row = rd.next("tensor row");
      if (row.size() != t.cols)
        throw ParseError("tensor " + std::string(name) + " row has " + std::to_string(row.size()) +
                             " values, expected " + std::to_string(t.cols),
                         rd.line());
      for (std::size_t col = 0; col < t.cols; ++col) t(r, col) = parse_hex(row[col], rd.line());
    }
  });
  tok = rd.next("end");
  if (tok.size() != 1 || tok[0] != "end") throw ParseError("expected 'end'", rd.line());
  try {
    c.params.check(c.dims);
  } catch (const Error& e) {
    throw ParseError(e.what(), rd.line());
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace thermoloop
