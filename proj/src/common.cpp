#include "nearv/common.hpp"

#include <cctype>
#include <cstdio>

namespace nearv {

const char* errc_name(Errc e) {
  switch (e) {
    case Errc::ImmediateOutOfRange: return "ImmediateOutOfRange";
    case Errc::FieldOutOfRange:     return "FieldOutOfRange";
    case Errc::VariantMismatch:     return "VariantMismatch";
    case Errc::IllegalInstruction:  return "IllegalInstruction";
    case Errc::ParseError:          return "ParseError";
    case Errc::VersionMismatch:     return "VersionMismatch";
    case Errc::SyntaxError:         return "SyntaxError";
    case Errc::UnknownMnemonic:     return "UnknownMnemonic";
    case Errc::DuplicateLabel:      return "DuplicateLabel";
    case Errc::UndefinedLocalLabel: return "UndefinedLocalLabel";
    case Errc::OverflowError:       return "OverflowError";
    case Errc::ConflictError:       return "ConflictError";
    case Errc::UndefinedSymbol:     return "UndefinedSymbol";
    case Errc::RelocOutOfRange:     return "RelocOutOfRange";
    case Errc::InternalError:       return "InternalError";
    case Errc::OverlapError:        return "OverlapError";
    case Errc::SpecError:           return "SpecError";
    case Errc::SemanticsMismatch:   return "SemanticsMismatch";
    case Errc::UsageError:          return "UsageError";
    case Errc::IoError:             return "IoError";
  }
  return "Unknown";
}

ToolError::ToolError(Errc code, const std::string& msg)
    : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

void fail(Errc code, const std::string& msg) { throw ToolError(code, msg); }

std::string to_hex(u32 v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%x", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) b++;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) e--;
  return s.substr(b, e - b);
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) i++;
    size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) i++;
    if (i > b) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

std::optional<i64> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i >= s.size()) return std::nullopt;
  int base = 10;
  if (s.size() - i > 2 && s[i] == '0' && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
    base = 16;
    i += 2;
  }
  i64 v = 0;
  for (; i < s.size(); i++) {
    char c = s[i];
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (base == 16 && c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (base == 16 && c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else return std::nullopt;
    v = v * base + d;
    if (v > (i64(1) << 40)) return std::nullopt;  // reject absurd magnitudes early
  }
  return neg ? -v : v;
}

}  // namespace nearv
