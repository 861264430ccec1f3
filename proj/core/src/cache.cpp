#include "qgpt/cache.hpp"

#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "qgpt/error.hpp"
#include "qgpt/hash.hpp"

namespace qgpt {

namespace fs = std::filesystem;

GenerationCache::GenerationCache(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) {
    throw Error(ErrorCategory::kIoError,
                "cannot create cache dir " + root_.string() + ": " + ec.message());
  }
}

std::string GenerationCache::key(std::string_view model_id, std::string_view prompt) {
  std::string material;
  material.reserve(model_id.size() + prompt.size() + 1);
  material.append(model_id);
  material.push_back('\0');
  material.append(prompt);
  return sha256_hex(material);
}

fs::path GenerationCache::path_for(const std::string& key) const {
  return root_ / key.substr(0, 2) / (key + ".txt");
}

std::optional<std::string> GenerationCache::get(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void GenerationCache::put(const std::string& key, std::string_view raw) {
  const auto target = path_for(key);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (fs::exists(target, ec)) return;

  auto tmp = target;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) {
      throw Error(ErrorCategory::kIoError, "cannot write cache entry " + tmp.string());
    }
  }
  // link(2) fails with EEXIST if another writer got there first.
  if (::link(tmp.c_str(), target.c_str()) != 0 && errno != EEXIST) {
    const int err = errno;
    fs::remove(tmp, ec);
    throw Error(ErrorCategory::kIoError,
                "cannot publish cache entry " + target.string() + ": " + std::strerror(err));
  }
  fs::remove(tmp, ec);
}

}  // namespace qgpt
