#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nearv {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i32 = std::int32_t;
using i64 = std::int64_t;

enum class Errc {
  // encoding
  ImmediateOutOfRange,
  FieldOutOfRange,
  VariantMismatch,
  IllegalInstruction,
  // object format
  ParseError,
  VersionMismatch,
  // assembler
  SyntaxError,
  UnknownMnemonic,
  DuplicateLabel,
  UndefinedLocalLabel,
  // linker
  OverflowError,
  ConflictError,
  UndefinedSymbol,
  RelocOutOfRange,
  InternalError,
  // loader
  OverlapError,
  // evaluation harness
  SpecError,
  SemanticsMismatch,
  // cli
  UsageError,
  IoError,
};

const char* errc_name(Errc e);

/// Error thrown by every toolchain component; carries a machine-checkable code.
class ToolError : public std::runtime_error {
public:
  ToolError(Errc code, const std::string& msg);
  Errc code() const { return code_; }

private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& msg);

// Sign-extend the low `bits` bits of v (1 <= bits <= 31).
constexpr i32 sign_extend(u32 v, int bits) {
  u32 m = 1u << (bits - 1);
  return static_cast<i32>(((v & ((m << 1) - 1)) ^ m) - m);
}

constexpr bool is_pow2(u32 v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr u32 align_up(u32 v, u32 align) { return (v + align - 1) & ~(align - 1); }
constexpr u32 align_down(u32 v, u32 align) { return v & ~(align - 1); }

std::string to_hex(u32 v);

std::string_view trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);

// Parses decimal or 0x-hex, optional leading +/-.
std::optional<i64> parse_int(std::string_view s);

}  // namespace nearv
