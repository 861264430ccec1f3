#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qgpt {

enum class TokenKind { kWord, kPunct };

struct Token {
  std::string_view text;
  TokenKind kind;
};

/// Reference segmentation: maximal runs of word bytes (ASCII alphanumerics,
/// '_' and every byte >= 0x80) form one token, every other non-space byte is
/// a token of its own, and whitespace only separates.
std::vector<Token> tokenize(std::string_view text);

/// Pluggable token counter used for budgets. Implementations must be
/// deterministic and monotone under concatenation.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
};

class SegmentingTokenCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
};

const TokenCounter& default_token_counter();

inline std::size_t count_tokens(std::string_view text) {
  return default_token_counter().count(text);
}

}  // namespace qgpt
