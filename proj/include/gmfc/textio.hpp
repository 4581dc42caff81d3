#pragma once

#include <cstdio>
#include <string>
#include <vector>

// Deterministic text formatting.  All numbers written to CSV/stdout go
// through fmt_g so two runs (and two worker counts) produce byte-identical
// files.  %.17g round-trips every double exactly.

namespace gmfc {

inline std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

inline std::string fmt_int(long long x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld", x);
  return std::string(buf);
}

inline std::string join(const std::vector<std::string>& parts,
                        const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace gmfc
