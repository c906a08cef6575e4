#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace semlink::text {

bool is_valid_utf8(std::string_view s);

/// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

/// Converts ISO-8859-1 bytes to UTF-8.
std::string latin1_to_utf8(std::string_view s);

bool is_unicode_space(char32_t cp);
bool is_cjk(char32_t cp);

/// Collapses runs of Unicode whitespace to one ASCII space and trims both ends.
std::string normalize_whitespace(std::string_view s);

/// ASCII case folding plus the Latin-1 supplement / Greek / Cyrillic basic ranges.
std::string fold_case(std::string_view s);

/// Cuts `s` to at most `max_chars` code points, backing up to the last word
/// boundary when the cut would split a word.
std::string truncate_at_word(std::string_view s, std::size_t max_chars);

std::size_t codepoint_length(std::string_view s);

/// Lower-cased content tokens. Runs of letters/digits form words; CJK runs are
/// split into overlapping character bigrams (a lone CJK character is a unigram).
/// Punctuation never forms a token.
std::vector<std::string> tokenize(std::string_view s);

/// True for the bundled English stopwords.
bool is_stopword(std::string_view token);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace semlink::text
