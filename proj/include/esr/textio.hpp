#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <string>

#include "esr/error.hpp"

namespace esr::detail {

/// 17 significant digits: lossless for binary64.
inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// 9 significant digits: the precision of landmark and report files.
inline std::string fmt_g9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline double parse_double(const std::string& tok, const std::string& context) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw DataError(context + ": bad number '" + tok + "'");
  return v;
}

inline long long parse_int(const std::string& tok, const std::string& context) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw DataError(context + ": bad integer '" + tok + "'");
  return v;
}

/// Whitespace-delimited token reader for the structured text formats.
class TokenReader {
public:
  TokenReader(std::istream& in, std::string context)
      : in_(in), context_(std::move(context)) {}

  std::string next() {
    std::string tok;
    if (!(in_ >> tok)) throw DataError(context_ + ": unexpected end of file");
    return tok;
  }

  void expect(const std::string& keyword) {
    const std::string tok = next();
    if (tok != keyword)
      throw DataError(context_ + ": expected '" + keyword + "', got '" + tok + "'");
  }

  double next_double() { return parse_double(next(), context_); }

  long long next_int() { return parse_int(next(), context_); }

  long long next_count(const std::string& what, long long lo, long long hi) {
    const long long v = next_int();
    if (v < lo || v > hi)
      throw DataError(context_ + ": " + what + " out of range (" + std::to_string(v) + ")");
    return v;
  }

  bool at_eof() {
    in_ >> std::ws;
    return in_.eof();
  }

  const std::string& context() const { return context_; }

private:
  std::istream& in_;
  std::string context_;
};

}  // namespace esr::detail
