#include "shardgame/digest.hpp"

#include <openssl/sha.h>

namespace shardgame {

std::vector<std::uint8_t> encode_view(const TransactionView& view) {
  if (view.tx_count == 0) return {0, 0, 0, 0};
  constexpr std::uint32_t payload = 16;
  std::vector<std::uint8_t> out;
  out.reserve(4 + payload);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(payload >> (8 * b)));
  for (std::uint64_t field : {view.tx_count, view.content_id}) {
    for (int b = 7; b >= 0; --b) out.push_back(static_cast<std::uint8_t>(field >> (8 * b)));
  }
  return out;
}

Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  SHA256(bytes.data(), bytes.size(), out.data());
  return out;
}

std::string to_hex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (auto b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0x0f]);
  }
  return out;
}

}  // namespace shardgame
