#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "proofplan/logic.hpp"

namespace proofplan {

/// Set of key identifiers a-z, stored as a bitmask.
class KeySet {
public:
    constexpr KeySet() = default;
    static constexpr KeySet from_mask(std::uint32_t mask) { return KeySet(mask); }
    static KeySet from_string(std::string_view letters);

    constexpr bool contains(KeyId k) const { return (mask_ >> bit(k)) & 1U; }
    constexpr void insert(KeyId k) { mask_ |= 1U << bit(k); }
    constexpr KeySet with(KeyId k) const {
        KeySet s = *this;
        s.insert(k);
        return s;
    }
    constexpr bool subset_of(KeySet other) const { return (mask_ & ~other.mask_) == 0; }
    constexpr bool empty() const { return mask_ == 0; }
    constexpr std::uint32_t mask() const { return mask_; }
    int size() const { return std::popcount(mask_); }

    std::vector<KeyId> keys() const;
    /// Letters in ascending order, e.g. "ab"; empty string for no keys.
    std::string to_string() const;

    friend constexpr auto operator<=>(const KeySet &, const KeySet &) = default;

private:
    constexpr explicit KeySet(std::uint32_t mask) : mask_(mask) {}
    static constexpr unsigned bit(KeyId k) { return static_cast<unsigned>(k - 'a'); }
    std::uint32_t mask_ = 0;
};

struct AugmentedState {
    Cell cell;
    KeySet inventory;

    friend auto operator<=>(const AugmentedState &, const AugmentedState &) = default;
};

std::string to_string(const AugmentedState &s);

struct AugmentedStateHash {
    std::size_t operator()(const AugmentedState &s) const {
        const std::uint64_t packed = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.cell.x)) << 48) ^
                                     (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.cell.y)) << 32) ^
                                     s.inventory.mask();
        return std::hash<std::uint64_t>{}(packed * 0x9e3779b97f4a7c15ULL);
    }
};

}  // namespace proofplan
