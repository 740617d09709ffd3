#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string_view>

namespace headlab {

/// Writes through a sibling temporary file and renames it over `path`, so
/// readers never observe a partial file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace headlab
