#pragma once

// Whitespace-separated token stream for exact environment snapshots.
// Doubles are written as hex floats so they round-trip bit-exactly.

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "sea/ad/matrix.hpp"

namespace sea::env::detail {

class StateWriter {
 public:
  StateWriter& put(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    os_ << buf << ' ';
    return *this;
  }
  StateWriter& put_int(long long v) {
    os_ << v << ' ';
    return *this;
  }
  StateWriter& put_text(const std::string& s) {
    os_ << s.size() << ':' << s << ' ';
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

class StateReader {
 public:
  explicit StateReader(const std::string& s) : is_(s) {}
  double get() {
    std::string tok;
    if (!(is_ >> tok)) throw Error("environment state: truncated snapshot");
    return std::strtod(tok.c_str(), nullptr);
  }
  long long get_int() {
    long long v = 0;
    if (!(is_ >> v)) throw Error("environment state: truncated snapshot");
    return v;
  }
  std::string get_text() {
    std::size_t n = 0;
    char colon = 0;
    if (!(is_ >> n >> colon) || colon != ':') throw Error("environment state: malformed text field");
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    if (!is_) throw Error("environment state: truncated text field");
    return s;
  }

 private:
  std::istringstream is_;
};

}  // namespace sea::env::detail
