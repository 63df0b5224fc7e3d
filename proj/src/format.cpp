#include "asymdec/format.hpp"

#include "asymdec/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

namespace asymdec {

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  std::array<char, 32> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) return "NA";
  return std::string(buffer.data(), end);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace asymdec
