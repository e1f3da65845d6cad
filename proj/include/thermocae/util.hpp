#pragma once

#include <filesystem>
#include <fstream>
#include <string>

namespace thermocae {

/// Shortest decimal that round-trips to the same double (std::to_chars).
std::string format_real(double v);

/// Truncating text writer; creates parent directories. Throws IoError.
std::ofstream open_text_output(const std::filesystem::path& path);

}  // namespace thermocae
