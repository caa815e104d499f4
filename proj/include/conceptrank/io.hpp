#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

namespace conceptrank::io {

std::ifstream open_in(const std::filesystem::path& path,
                      std::ios::openmode mode = std::ios::in);
std::ofstream open_out(const std::filesystem::path& path,
                       std::ios::openmode mode = std::ios::out | std::ios::trunc);

/// Calls `fn(line, line_number)` for every non-blank line (1-based numbering,
/// trailing '\r' stripped).
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

std::string read_file(const std::filesystem::path& path);

}  // namespace conceptrank::io
