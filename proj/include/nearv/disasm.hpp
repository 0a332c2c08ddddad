#pragma once

#include <string>

#include "nearv/image.hpp"
#include "nearv/isa.hpp"
#include "nearv/object.hpp"

namespace nearv {

std::string reg_name(Reg r);
std::string freg_name(Reg r);

std::string disassemble(const Instruction& in);

/// Word form; illegal encodings render as `.word 0x...`.
std::string disassemble_word(u32 word, Variant variant);

/// Code sections with relocation annotations.
std::string disassemble_object(const ObjectUnit& unit, Variant variant);

/// Code ranges with symbol labels.
std::string disassemble_image(const Image& img);

}  // namespace nearv
