#include "semlink/text.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace semlink::text {

namespace {

// Returns the code point starting at s[i] and advances i. Invalid bytes yield
// U+FFFD and consume one byte.
char32_t next_codepoint(std::string_view s, std::size_t& i, bool* ok = nullptr) {
  auto fail = [&]() {
    ++i;
    if (ok) *ok = false;
    return char32_t{0xFFFD};
  };
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return fail();
  }
  if (i + len > s.size()) return fail();
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return fail();
    cp = (cp << 6) | (b & 0x3F);
  }
  // Overlong encodings, surrogates and out-of-range values.
  static constexpr std::array<char32_t, 5> min_for_len{0, 0, 0x80, 0x800, 0x10000};
  if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return fail();
  i += len;
  return cp;
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (is_unicode_space(cp)) return false;
  // General punctuation, CJK symbols/punctuation, fullwidth punctuation.
  if (cp >= 0x2000 && cp <= 0x206F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp >= 0xFF1A && cp <= 0xFF20) return false;
  if (cp >= 0xFF3B && cp <= 0xFF40) return false;
  if (cp >= 0xFF5B && cp <= 0xFF65) return false;
  if (cp >= 0x00A1 && cp <= 0x00BF) return false;
  if (cp == 0x00D7 || cp == 0x00F7 || cp == 0xFFFD) return false;
  return true;
}

char32_t fold(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if ((cp >= 0xC0 && cp <= 0xDE) && cp != 0xD7) return cp + 32;
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  bool ok = true;
  for (std::size_t i = 0; i < s.size() && ok;) next_codepoint(s, i, &ok);
  return ok;
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) out.push_back(next_codepoint(s, i));
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

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

std::string latin1_to_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) append_utf8(out, c);
  return out;
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
         (cp >= 0x3040 && cp <= 0x30FF) || (cp >= 0xAC00 && cp <= 0xD7AF);
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t start = i;
    const char32_t cp = next_codepoint(s, i);
    if (is_unicode_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (cp == 0xFFFD) {
      append_utf8(out, cp);
    } else {
      out.append(s.substr(start, i - start));
    }
  }
  return out;
}

std::string fold_case(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) append_utf8(out, fold(next_codepoint(s, i)));
  return out;
}

std::size_t codepoint_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    next_codepoint(s, i);
    ++n;
  }
  return n;
}

std::string truncate_at_word(std::string_view s, std::size_t max_chars) {
  const std::u32string cps = decode_utf8(s);
  if (cps.size() <= max_chars) return std::string(s);
  std::size_t cut = max_chars;
  const bool splits_word = !is_unicode_space(cps[cut]) && !is_unicode_space(cps[cut - 1]);
  if (splits_word) {
    std::size_t back = cut;
    while (back > 0 && !is_unicode_space(cps[back - 1])) --back;
    // A single word longer than the cap is hard-cut.
    if (back > 0) cut = back;
  }
  while (cut > 0 && is_unicode_space(cps[cut - 1])) --cut;
  return encode_utf8(std::u32string_view(cps).substr(0, cut));
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  const std::u32string cps = decode_utf8(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_cjk(cps[i])) {
      std::size_t j = i;
      while (j < cps.size() && is_cjk(cps[j])) ++j;
      if (j - i == 1) {
        tokens.push_back(encode_utf8(std::u32string_view(cps).substr(i, 1)));
      } else {
        for (std::size_t k = i; k + 1 < j; ++k) {
          tokens.push_back(encode_utf8(std::u32string_view(cps).substr(k, 2)));
        }
      }
      i = j;
    } else if (is_word_char(cps[i])) {
      std::string word;
      while (i < cps.size() && is_word_char(cps[i]) && !is_cjk(cps[i])) {
        append_utf8(word, fold(cps[i]));
        ++i;
      }
      tokens.push_back(std::move(word));
    } else {
      ++i;
    }
  }
  return tokens;
}

bool is_stopword(std::string_view token) {
  static const std::unordered_set<std::string_view> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
      "both", "but", "by", "can", "could", "d", "did", "do", "does", "doing", "down",
      "during", "each", "few", "for", "from", "further", "had", "has", "have", "having",
      "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if",
      "in", "into", "is", "it", "its", "itself", "just", "ll", "m", "me", "more", "most",
      "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or",
      "other", "our", "ours", "ourselves", "out", "over", "own", "re", "s", "same", "she",
      "should", "so", "some", "such", "t", "than", "that", "the", "their", "theirs", "them",
      "themselves", "then", "there", "these", "they", "this", "those", "through", "to",
      "too", "under", "until", "up", "us", "ve", "very", "was", "we", "were", "what", "when",
      "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you",
      "your", "yours", "yourself", "yourselves",
      // Frequent CJK function characters (unigrams only; bigrams pass through).
      "的", "了", "和", "是", "在", "与", "及", "或", "也", "就", "都", "而"};
  return words.contains(token);
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace semlink::text
