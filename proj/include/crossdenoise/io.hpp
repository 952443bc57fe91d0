#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cdn {

// RFC-4180 field quoting: quote when a field contains comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

// One CSV row from already-formatted fields, terminated with '\n'.
std::string csv_row(const std::vector<std::string>& fields);

// Fixed-format doubles for reproducible text artifacts.
std::string fmt_fixed(double v, int decimals);
// Shortest-faithful formatting (%.17g) used by the weight dumps.
std::string fmt_full(double v);
// %.*g general formatting.
std::string fmt_g(double v, int significant);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex chars.
std::string file_digest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace cdn
