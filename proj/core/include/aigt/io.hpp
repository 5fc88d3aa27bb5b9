#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aigt {

std::string read_text_file(const std::string& path);

// Writes to a sibling temp file, then renames over the target.
void atomic_write_file(const std::string& path, const std::string& content);

std::string trim(const std::string& s);
std::string to_lower_ascii(std::string s);

// RFC-4180: quoted fields, doubled quotes, commas/newlines inside quotes.
// Returns one vector of fields per record; `record_lines` (if given) receives
// the 1-based line number each record starts on.
std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                std::vector<size_t>* record_lines = nullptr);
std::string csv_escape(const std::string& field);

uint64_t fnv1a64(const std::string& data);

// Fixed-precision formatting so emitted reports are byte-stable.
std::string format_double(double v, int precision = 6);

}  // namespace aigt
