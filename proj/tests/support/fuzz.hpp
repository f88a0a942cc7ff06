#pragma once

// Random IR programs for property and acceptance tests.

#include <random>
#include <string>
#include <vector>

#include "vta/config.hpp"
#include "vta/ir.hpp"

namespace vta::testing {

enum class Variant { Gemm, Alu, GemmAlu, Scalar, AddAcc };

inline constexpr Variant kAllVariants[] = {Variant::Gemm, Variant::Alu, Variant::GemmAlu, Variant::Scalar,
                                           Variant::AddAcc};

const char* to_string(Variant v);

struct GenOptions {
  int bs = 2;
  int max_blocks = 4;  // per dimension
  bool data_lists = true;
  bool partial_store = true;
};

/// A semantically valid program of the given variant. All non-output
/// matrices are "input" sources.
IrProgram random_program(std::mt19937_64& rng, Variant variant, const GenOptions& options);

/// A small random config with the given block size: tiny buffers (forcing
/// partitions) or roomy ones.
VtaConfig random_config(std::mt19937_64& rng, int bs);

/// Writes the program straight from the grammar productions with random
/// whitespace and line breaks. Independent of render_ir.
std::string emit_grammar_text(const IrProgram& program, std::mt19937_64& rng);

struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
  enum class Kind { Punct, String, Number } kind = Kind::Punct;
};

/// Lexes a JSON document into tokens (no validation).
std::vector<Token> tokenize(const std::string& text);

/// Applies one random single-token edit: delete, duplicate, swap with the
/// next token, or replace by a token of another lexical class. Returns the
/// mutated text and a short description.
std::pair<std::string, std::string> mutate_one_token(const std::string& text, std::mt19937_64& rng);

}  // namespace vta::testing
