#include "qgpt/tokenizer.hpp"

namespace qgpt {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_word(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_word(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_word(static_cast<unsigned char>(text[j]))) ++j;
      tokens.push_back({text.substr(i, j - i), TokenKind::kWord});
      i = j;
    } else {
      tokens.push_back({text.substr(i, 1), TokenKind::kPunct});
      ++i;
    }
  }
  return tokens;
}

std::size_t SegmentingTokenCounter::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_word = false;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word(c)) {
      if (!in_word) ++n;
      in_word = true;
    } else {
      in_word = false;
      if (!is_space(c)) ++n;
    }
  }
  return n;
}

const TokenCounter& default_token_counter() {
  static const SegmentingTokenCounter counter;
  return counter;
}

}  // namespace qgpt
