#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace attribens {

// FNV-1a 64-bit content digests for run-manifest integrity checks (corruption
// and stale-reference detection, not a cryptographic guarantee).
std::uint64_t fnv1a64(std::span<const unsigned char> bytes) noexcept;
std::string digest_bytes(std::span<const unsigned char> bytes);
std::string digest_string(const std::string& s);
std::string digest_file(const std::string& path);  // throws if unreadable

}  // namespace attribens
