#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shardgame {

using Digest = std::array<std::uint8_t, 32>;

inline constexpr std::string_view kDigestAlgorithm = "sha256";

/// What a processor received for its shard, reduced to the two things the
/// simulator distinguishes: how many transactions and which batch.
struct TransactionView {
  std::uint64_t tx_count = 0;
  std::uint64_t content_id = 0;

  bool operator==(const TransactionView&) const = default;
};

/// Length-prefixed canonical encoding: u32 little-endian payload length, then
/// tx_count and content_id as u64 big-endian. An empty view (tx_count == 0)
/// encodes to the 4-byte zero-length sentinel.
std::vector<std::uint8_t> encode_view(const TransactionView& view);

Digest sha256(std::span<const std::uint8_t> bytes);

std::string to_hex(const Digest& digest);

}  // namespace shardgame
