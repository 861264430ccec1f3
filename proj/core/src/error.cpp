#include "qgpt/error.hpp"

#include <utility>

namespace qgpt {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return "invalid_argument";
    case ErrorCategory::kParseError: return "parse_error";
    case ErrorCategory::kDuplicateId: return "duplicate_id";
    case ErrorCategory::kDanglingGold: return "dangling_gold";
    case ErrorCategory::kBudgetTooSmall: return "budget_too_small";
    case ErrorCategory::kParseFailure: return "parse_failure";
    case ErrorCategory::kProviderError: return "provider_error";
    case ErrorCategory::kExhaustedRetries: return "exhausted_retries";
    case ErrorCategory::kStrategyMismatch: return "strategy_mismatch";
    case ErrorCategory::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCategory::kMissingRun: return "missing_run";
    case ErrorCategory::kIoError: return "io_error";
    case ErrorCategory::kConfigError: return "config_error";
    case ErrorCategory::kIndexFormat: return "index_format";
  }
  return "unknown";
}

std::string_view to_string(ExtractionStage stage) {
  switch (stage) {
    case ExtractionStage::kWhole: return "whole";
    case ExtractionStage::kFenced: return "fenced";
    case ExtractionStage::kSubstring: return "substring";
    case ExtractionStage::kValidation: return "validation";
  }
  return "unknown";
}

namespace {

std::string with_locus(const std::string& file, std::size_t line,
                       const std::string& message) {
  std::string out = file;
  if (line > 0) out += ":" + std::to_string(line);
  return out + ": " + message;
}

}  // namespace

ParseError::ParseError(std::string file, std::size_t line,
                       const std::string& message)
    : Error(ErrorCategory::kParseError, with_locus(file, line, message)),
      file_(std::move(file)),
      line_(line) {}

ParseFailure::ParseFailure(ExtractionStage stage, const std::string& message)
    : Error(ErrorCategory::kParseFailure,
            std::string(to_string(stage)) + ": " + message),
      stage_(stage) {}

ExhaustedRetries::ExhaustedRetries(int attempts, std::string last_raw)
    : Error(ErrorCategory::kExhaustedRetries,
            "no acceptable reply after " + std::to_string(attempts) +
                " attempt(s)"),
      attempts_(attempts),
      last_raw_(std::move(last_raw)) {}

}  // namespace qgpt
