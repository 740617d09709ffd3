#include "headlab/text.hpp"

namespace headlab {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

bool is_cjk(char32_t cp) {
  return in(cp, 0x4E00, 0x9FFF) ||    // unified ideographs
         in(cp, 0x3400, 0x4DBF) ||    // extension A
         in(cp, 0x20000, 0x2FA1F) ||  // extensions B.. and compatibility supplement
         in(cp, 0xF900, 0xFAFF) ||    // compatibility ideographs
         in(cp, 0x3040, 0x309F) ||    // hiragana
         in(cp, 0x30A0, 0x30FF) ||    // katakana
         in(cp, 0x31F0, 0x31FF) ||    // katakana phonetic extensions
         in(cp, 0xAC00, 0xD7AF) ||    // hangul syllables
         in(cp, 0x1100, 0x11FF) ||    // hangul jamo
         in(cp, 0x3130, 0x318F);      // hangul compatibility jamo
}

bool is_emoji(char32_t cp) {
  return in(cp, 0x1F300, 0x1FAFF) || in(cp, 0x1F000, 0x1F2FF) || in(cp, 0x2600, 0x27BF) ||
         in(cp, 0x2B00, 0x2BFF);
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (in(cp, 0x00C0, 0x024F)) return cp != 0xD7 && cp != 0xF7;  // Latin-1 letters, Latin Extended
  return in(cp, 0x0370, 0x03FF) ||  // Greek
         in(cp, 0x0400, 0x04FF) ||  // Cyrillic
         in(cp, 0x05D0, 0x05EA) ||  // Hebrew letters
         in(cp, 0x0620, 0x064A) ||  // Arabic letters
         in(cp, 0x0900, 0x097F) ||  // Devanagari
         in(cp, 0x0E01, 0x0E4E) ||  // Thai
         in(cp, 0x1E00, 0x1EFF);    // Latin Extended Additional
}

char32_t fold(char32_t cp) {
  // Fullwidth ASCII letters and digits.
  if (in(cp, 0xFF10, 0xFF19) || in(cp, 0xFF21, 0xFF3A) || in(cp, 0xFF41, 0xFF5A)) cp -= 0xFEE0;
  if (in(cp, 'A', 'Z')) return cp + 0x20;
  if (in(cp, 0x00C0, 0x00DE) && cp != 0xD7) return cp + 0x20;
  if (cp == 0x0178) return 0x00FF;
  if (in(cp, 0x0100, 0x017F) && cp != 0x0130 && cp != 0x0138 && cp != 0x0149) {
    // Latin Extended-A alternates upper/lower, with a phase shift in 0x0139..0x0148 and 0x0179..0x017E.
    const bool odd_upper = in(cp, 0x0139, 0x0148) || in(cp, 0x0179, 0x017E);
    if ((cp % 2 == 1) == odd_upper) return cp + 1;
    return cp;
  }
  if (in(cp, 0x0391, 0x03A9) && cp != 0x03A2) return cp + 0x20;
  if (in(cp, 0x0410, 0x042F)) return cp + 0x20;
  if (in(cp, 0x0400, 0x040F)) return cp + 0x50;
  return cp;
}

}  // namespace

CharClass classify(char32_t cp) {
  if (is_cjk(cp)) return CharClass::cjk;
  if (is_emoji(cp)) return CharClass::emoji;
  if (is_word_char(fold(cp))) return CharClass::word;
  return CharClass::other;
}

std::vector<char32_t> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < text.size()) {
    const unsigned char b0 = byte(i);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(len) > text.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const unsigned char b = byte(i + static_cast<std::size_t>(k));
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (!ok || cp < kMin[len] || cp > 0x10FFFF || in(cp, 0xD800, 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

TokenSeq tokenize(std::string_view text) {
  TokenSeq tokens;
  std::string word;
  const auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back(std::move(word));
      word.clear();
    }
  };
  for (const char32_t cp : decode_utf8(text)) {
    switch (classify(cp)) {
      case CharClass::word:
        append_utf8(word, fold(cp));
        break;
      case CharClass::cjk:
      case CharClass::emoji: {
        flush();
        std::string single;
        append_utf8(single, cp);
        tokens.push_back(std::move(single));
        break;
      }
      case CharClass::other:
        flush();
        break;
    }
  }
  flush();
  return tokens;
}

bool is_unspaced_token(std::string_view token) {
  const auto cps = decode_utf8(token);
  if (cps.size() != 1) return false;
  const auto c = classify(cps.front());
  return c == CharClass::cjk || c == CharClass::emoji;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool prev_word = false;
  for (const auto& tok : tokens) {
    if (tok.empty() || (tok.size() > 2 && tok.front() == '<' && tok.back() == '>')) continue;
    const bool word = !is_unspaced_token(tok);
    if (word && prev_word) out.push_back(' ');
    out += tok;
    prev_word = word;
  }
  return out;
}

}  // namespace headlab
