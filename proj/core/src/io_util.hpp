#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace qgpt::detail {

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never see a torn file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace qgpt::detail
