#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "qgpt/cache.hpp"
#include "qgpt/error.hpp"
#include "qgpt/provider.hpp"

namespace qgpt::detail {

template <typename T>
struct LoopOutcome {
  std::optional<T> value;  // last parsed reply, if any
  bool accepted = false;
  int calls = 0;
  bool from_cache = false;
  std::string raw;  // raw text behind `value`, or the last raw reply
};

/// Cache lookup, then up to `max_attempts` provider calls with the same
/// prompt. `parse(raw)` throws ParseFailure on bad replies; `accept(value)`
/// decides whether a parsed reply ends the loop. Accepted replies, and the
/// final parsed-but-unaccepted one, are written to the cache.
template <typename T, typename Parse, typename Accept>
LoopOutcome<T> run_generation(std::string_view prompt, TextGenProvider& provider,
                              int max_attempts, GenerationCache* cache, Parse&& parse,
                              Accept&& accept) {
  LoopOutcome<T> out;
  std::string key;
  if (cache) {
    key = GenerationCache::key(provider.model_id(), prompt);
    if (auto hit = cache->get(key)) {
      try {
        out.value = parse(*hit);
        out.accepted = accept(*out.value);
        out.from_cache = true;
        out.raw = std::move(*hit);
        return out;
      } catch (const ParseFailure&) {
        out.value.reset();  // stale entry; fall through to the provider
      }
    }
  }
  std::string parsed_raw;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::string raw = provider.complete(prompt);
    ++out.calls;
    try {
      T value = parse(raw);
      const bool ok = accept(value);
      out.value = std::move(value);
      parsed_raw = raw;
      out.raw = std::move(raw);
      if (ok) {
        out.accepted = true;
        break;
      }
    } catch (const ParseFailure&) {
      out.raw = std::move(raw);
    }
  }
  if (out.value) {
    out.raw = parsed_raw;
    if (cache) cache->put(key, parsed_raw);
  }
  return out;
}

}  // namespace qgpt::detail
