#pragma once

#include <string>
#include <string_view>

namespace shellforge::util {

std::string to_hex(std::string_view bytes);

// SHA-256 digest as lowercase hex. Backed by OpenSSL's EVP interface.
std::string sha256_hex(std::string_view bytes);

// RFC 4648 base64url without padding; used to embed identifiers in URLs.
std::string base64url_encode(std::string_view bytes);
std::string base64url_decode(std::string_view text);  // throws Error{NotFound} on bad input

}  // namespace shellforge::util
