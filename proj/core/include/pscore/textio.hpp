#pragma once

#include <string>
#include <vector>

namespace pscore {

// Shortest 17-significant-digit rendering that round-trips an IEEE double
// exactly through strtod. Used by every CSV artifact.
std::string format_double(double value);

// Strict double parse: the whole token must be consumed. Returns false on
// failure instead of throwing so callers can attach row/column context.
bool parse_double(const std::string& token, double& out);

// Minimal RFC-4180-style CSV. Fields containing comma, quote, CR or LF are
// quoted on write; quoted fields with doubled quotes are handled on read.
std::string csv_escape(const std::string& field);
std::vector<std::vector<std::string>> read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::vector<std::string>>& rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Creates the directory (and parents) if missing; errors if a non-directory
// exists at the path.
void ensure_directory(const std::string& path);

}  // namespace pscore
