#pragma once

#include <cstdint>
#include <string_view>

namespace stormgen {

/// Child seed from (master, stage name, index) by stable hashing
/// (FNV-1a over the name, SplitMix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index = 0);

}  // namespace stormgen
