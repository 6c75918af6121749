#pragma once

#include <string>
#include <string_view>

namespace uncq {

// SHA-256 digest as a lowercase hex string.
std::string sha256_hex(std::string_view data);

}  // namespace uncq
