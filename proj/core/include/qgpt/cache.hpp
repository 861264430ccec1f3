#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace qgpt {

/// Content-addressed store of raw model replies, one file per key under
/// `root/<first two hex chars>/<key>.txt`. Entries are write-once: the first
/// writer of a key wins and later writes are ignored, which makes concurrent
/// writers from threads or processes safe.
class GenerationCache {
 public:
  explicit GenerationCache(std::filesystem::path root);

  /// SHA-256 over model id and prompt.
  static std::string key(std::string_view model_id, std::string_view prompt);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, std::string_view raw);

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path root_;
};

}  // namespace qgpt
