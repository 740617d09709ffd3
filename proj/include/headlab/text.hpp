#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace headlab {

/// Ordered token strings; never contains an empty token.
using TokenSeq = std::vector<std::string>;

enum class CharClass { cjk, emoji, word, other };

CharClass classify(char32_t cp);

/// Splits mixed-script text into word units.
///
/// Every CJK ideograph, kana or hangul codepoint becomes its own token, as
/// does every emoji codepoint. Maximal runs of other letters and digits form
/// one lowercased token (fullwidth ASCII is folded to ASCII first).
/// Whitespace, punctuation and symbols are dropped. Invalid UTF-8 bytes are
/// treated as punctuation.
TokenSeq tokenize(std::string_view text);

/// Joins tokens back into text: single spaces between two word tokens,
/// nothing around CJK or emoji tokens. Reserved `<...>` tokens are skipped.
std::string detokenize(std::span<const std::string> tokens);

/// True when the token is a single CJK or emoji codepoint.
bool is_unspaced_token(std::string_view token);

std::vector<char32_t> decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);

}  // namespace headlab
