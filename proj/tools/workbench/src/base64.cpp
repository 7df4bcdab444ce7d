#include "defgrid/workbench/base64.hpp"

#include "defgrid/errors.hpp"

#include <sodium.h>

namespace defgrid::workbench {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const std::size_t cap = sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(cap, '\0');
  sodium_bin2base64(out.data(), cap, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(cap - 1);  // drop the terminator
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.starts_with("data:")) {
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw InvalidArgument("malformed data URL");
    text.remove_prefix(comma + 1);
  }
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \t\r\n", &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size()) {
    throw InvalidArgument("malformed base64 payload");
  }
  out.resize(len);
  return out;
}

}  // namespace defgrid::workbench
