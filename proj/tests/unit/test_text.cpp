#include <doctest.h>

#include "semlink/text.hpp"

using namespace semlink::text;

TEST_CASE("utf8 validity") {
  CHECK(is_valid_utf8("plain ascii"));
  CHECK(is_valid_utf8("caf\xc3\xa9"));
  CHECK(is_valid_utf8("\xe4\xb8\xad\xe6\x96\x87"));
  CHECK_FALSE(is_valid_utf8("caf\xe9"));
  CHECK_FALSE(is_valid_utf8("\xc0\xaf"));          // overlong '/'
  CHECK_FALSE(is_valid_utf8("\xed\xa0\x80"));      // surrogate
  CHECK_FALSE(is_valid_utf8("\xf4\x90\x80\x80"));  // above U+10FFFF
  CHECK_FALSE(is_valid_utf8("\xe4\xb8"));          // truncated
}

TEST_CASE("decode and encode round trip") {
  const std::string s = "a\xc3\xa9\xe4\xb8\xad\xf0\x9f\x98\x80";
  const auto cps = decode_utf8(s);
  REQUIRE(cps.size() == 4);
  CHECK(cps[1] == U'é');
  CHECK(cps[3] == U'\U0001F600');
  CHECK(encode_utf8(cps) == s);
  CHECK(decode_utf8("\xff")[0] == 0xFFFD);
}

TEST_CASE("latin1 conversion") {
  CHECK(latin1_to_utf8("caf\xe9") == "caf\xc3\xa9");
  CHECK(latin1_to_utf8("abc") == "abc");
}

TEST_CASE("whitespace normalization") {
  CHECK(normalize_whitespace("  a \t\n b  ") == "a b");
  CHECK(normalize_whitespace("a\xc2\xa0\xc2\xa0" "b") == "a b");  // NBSP
  CHECK(normalize_whitespace("a\xe3\x80\x80" "b") == "a b");      // ideographic space
  CHECK(normalize_whitespace("") == "");
  CHECK(normalize_whitespace(" \n ") == "");
}

TEST_CASE("case folding") {
  CHECK(fold_case("HeLLo") == "hello");
  CHECK(fold_case("\xc3\x89T\xc3\x89") == "\xc3\xa9t\xc3\xa9");  // ÉTÉ
  CHECK(fold_case("\xd0\x9c\xd0\x98\xd0\xa0") == "\xd0\xbc\xd0\xb8\xd1\x80");  // МИР
}

TEST_CASE("truncate at word boundary") {
  CHECK(truncate_at_word("hello world", 20) == "hello world");
  CHECK(truncate_at_word("hello world", 8) == "hello");
  CHECK(truncate_at_word("hello world", 6) == "hello");
  CHECK(truncate_at_word("hello world", 5) == "hello");
  CHECK(truncate_at_word("supercalifragilistic", 5) == "super");
  CHECK(codepoint_length(truncate_at_word("\xc3\xa9\xc3\xa9\xc3\xa9 \xc3\xa9\xc3\xa9", 4)) == 3);
}

TEST_CASE("tokenize words, punctuation and CJK") {
  CHECK(tokenize("Hello, World! 42x") == std::vector<std::string>{"hello", "world", "42x"});
  CHECK(tokenize("...---!!!").empty());
  CHECK(tokenize("\xe4\xb8\xad\xe6\x96\x87\xe5\xad\x97") ==
        std::vector<std::string>{"\xe4\xb8\xad\xe6\x96\x87", "\xe6\x96\x87\xe5\xad\x97"});
  CHECK(tokenize("\xe4\xb8\xad") == std::vector<std::string>{"\xe4\xb8\xad"});
  CHECK(tokenize("abc\xe4\xb8\xad\xe6\x96\x87") ==
        std::vector<std::string>{"abc", "\xe4\xb8\xad\xe6\x96\x87"});
  CHECK(tokenize("caf\xc3\x89") == std::vector<std::string>{"caf\xc3\xa9"});
}

TEST_CASE("stopwords") {
  CHECK(is_stopword("the"));
  CHECK(is_stopword("and"));
  CHECK_FALSE(is_stopword("algebra"));
  CHECK_FALSE(is_stopword("The"));
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
