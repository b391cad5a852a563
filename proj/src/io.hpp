#pragma once

#include <filesystem>
#include <string>

namespace senf::io {

// Throws IoError.
std::string read_text(const std::filesystem::path& path);
// Writes to a sibling temporary, then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace senf::io
