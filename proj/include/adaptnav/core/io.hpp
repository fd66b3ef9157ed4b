#pragma once

#include <string>

namespace adaptnav {

std::string read_file(const std::string& path);

// Writes via a temp file in the same directory then renames over the target,
// so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

}  // namespace adaptnav
