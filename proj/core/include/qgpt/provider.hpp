#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>

namespace qgpt {

/// Text-generation backend. Implementations must be callable concurrently.
/// Transport, auth and server failures surface as kProviderError.
class TextGenProvider {
 public:
  virtual ~TextGenProvider() = default;

  /// Sends `prompt` as a single user message and returns the reply text.
  virtual std::string complete(std::string_view prompt) = 0;

  /// Identifies the model for cache keys.
  virtual std::string model_id() const = 0;
};

struct HttpChatConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";  // ".../chat/completions" is appended
  std::string model;
  std::string api_key;  // taken from the environment by callers, never from config files
  double temperature = 0.2;
  int timeout_seconds = 120;
};

/// OpenAI-compatible chat-completion client:
/// POST {base_url}/chat/completions with {model, messages:[{role,content}], temperature},
/// reply text read from choices[0].message.content.
class HttpChatProvider final : public TextGenProvider {
 public:
  explicit HttpChatProvider(HttpChatConfig config);

  std::string complete(std::string_view prompt) override;
  std::string model_id() const override { return config_.model; }

 private:
  HttpChatConfig config_;
};

/// Replies computed by a callback; counts calls. For tests and scripted runs.
class ScriptedProvider final : public TextGenProvider {
 public:
  using Script = std::function<std::string(std::string_view prompt, int call_index)>;

  ScriptedProvider(std::string model_id, Script script)
      : model_id_(std::move(model_id)), script_(std::move(script)) {}

  std::string complete(std::string_view prompt) override;
  std::string model_id() const override { return model_id_; }

  int calls() const noexcept { return calls_.load(); }

 private:
  std::string model_id_;
  Script script_;
  std::atomic<int> calls_{0};
  std::mutex mu_;
};

/// Offline stand-in for an instruction-tuned model. Recognizes the header +
/// question, question-only, description and decomposition prompts and answers
/// each deterministically from the markdown table (or question) it contains.
class TemplateMockProvider final : public TextGenProvider {
 public:
  explicit TemplateMockProvider(std::string model_id = "mock-template")
      : model_id_(std::move(model_id)) {}

  std::string complete(std::string_view prompt) override;
  std::string model_id() const override { return model_id_; }

  int calls() const noexcept { return calls_.load(); }

 private:
  std::string model_id_;
  std::atomic<int> calls_{0};
};

}  // namespace qgpt
