#pragma once

#include <string>

namespace attribens::detail {

std::string read_file(const std::string& path);

// Writes to <path>.tmp then renames, so readers never observe partial files.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace attribens::detail
