#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qgpt {

// Machine-readable failure classes. The CLI prints these verbatim.
enum class ErrorCategory {
  kInvalidArgument,
  kParseError,
  kDuplicateId,
  kDanglingGold,
  kBudgetTooSmall,
  kParseFailure,
  kProviderError,
  kExhaustedRetries,
  kStrategyMismatch,
  kDimensionMismatch,
  kMissingRun,
  kIoError,
  kConfigError,
  kIndexFormat,
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Malformed input file. `line` is 1-based; 0 when the locus is the whole file.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& message);

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Stage of JSON payload extraction at which a model reply was rejected.
enum class ExtractionStage { kWhole, kFenced, kSubstring, kValidation };

std::string_view to_string(ExtractionStage stage);

class ParseFailure : public Error {
 public:
  ParseFailure(ExtractionStage stage, const std::string& message);

  ExtractionStage stage() const noexcept { return stage_; }

 private:
  ExtractionStage stage_;
};

class ExhaustedRetries : public Error {
 public:
  ExhaustedRetries(int attempts, std::string last_raw);

  int attempts() const noexcept { return attempts_; }
  const std::string& last_raw() const noexcept { return last_raw_; }

 private:
  int attempts_;
  std::string last_raw_;
};

}  // namespace qgpt
