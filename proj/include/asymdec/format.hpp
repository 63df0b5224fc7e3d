#pragma once

#include <string>

namespace asymdec {

// Shortest decimal that parses back to the same double; "NA" for NaN.
std::string format_double(double value);

// Writes the whole string, replacing any existing file. Throws ConfigError
// when the file cannot be opened.
void write_text(const std::string& path, const std::string& text);

}  // namespace asymdec
