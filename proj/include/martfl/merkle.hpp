#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "martfl/bytes.hpp"

namespace martfl {

using LeafBlind = std::array<uint8_t, 16>;

/// Binary SHA-256 Merkle tree; an odd node at any level is paired with a copy
/// of itself.
struct MerkleTree {
    /// Per-leaf blinding derived from the vector salt, so openings of sampled
    /// leaves do not make sibling leaves brute-forceable over the small
    /// quantized domain.
    static LeafBlind leaf_blind(const std::array<uint8_t, 16>& salt, uint32_t index) {
        Bytes buf(salt.begin(), salt.end());
        append_u32be(buf, index);
        Digest d = sha256(buf);
        LeafBlind blind{};
        std::copy(d.begin(), d.begin() + 16, blind.begin());
        return blind;
    }

    static Digest hash_leaf(uint32_t index, uint32_t quantized, const LeafBlind& blind) {
        Bytes buf;
        append_u32be(buf, index);
        append_u32be(buf, quantized);
        append_bytes(buf, blind.data(), blind.size());
        return sha256(buf);
    }

    static Digest hash_inner(const Digest& left, const Digest& right) {
        Bytes buf;
        append_bytes(buf, left.data(), left.size());
        append_bytes(buf, right.data(), right.size());
        return sha256(buf);
    }

    static Digest root(std::vector<Digest> level) {
        if (level.empty()) throw std::invalid_argument("MerkleTree: no leaves");
        while (level.size() > 1) {
            std::vector<Digest> next;
            next.reserve((level.size() + 1) / 2);
            for (size_t i = 0; i < level.size(); i += 2) {
                const Digest& left = level[i];
                const Digest& right = (i + 1 < level.size()) ? level[i + 1] : level[i];
                next.push_back(hash_inner(left, right));
            }
            level = std::move(next);
        }
        return level[0];
    }

    /// Sibling digests from the leaf level up to (excluding) the root.
    static std::vector<Digest> path(std::vector<Digest> level, size_t index) {
        if (index >= level.size()) throw std::invalid_argument("MerkleTree: index out of range");
        std::vector<Digest> out;
        while (level.size() > 1) {
            size_t sibling = (index % 2 == 0) ? index + 1 : index - 1;
            if (sibling >= level.size()) sibling = index;  // duplicated odd node
            out.push_back(level[sibling]);
            std::vector<Digest> next;
            next.reserve((level.size() + 1) / 2);
            for (size_t i = 0; i < level.size(); i += 2) {
                const Digest& left = level[i];
                const Digest& right = (i + 1 < level.size()) ? level[i + 1] : level[i];
                next.push_back(hash_inner(left, right));
            }
            level = std::move(next);
            index /= 2;
        }
        return out;
    }

    static bool verify_path(const Digest& leaf, size_t index, size_t leaf_count,
                            const std::vector<Digest>& path, const Digest& expected_root) {
        if (leaf_count == 0 || index >= leaf_count) return false;
        Digest node = leaf;
        size_t level_size = leaf_count;
        size_t pos = 0;
        for (; level_size > 1; level_size = (level_size + 1) / 2, index /= 2, ++pos) {
            if (pos >= path.size()) return false;
            const Digest& sibling = path[pos];
            if (index % 2 == 0) {
                // When the node is the duplicated last element, its sibling is itself.
                if (index + 1 >= level_size && sibling != node) return false;
                node = hash_inner(node, sibling);
            } else {
                node = hash_inner(sibling, node);
            }
        }
        return pos == path.size() && node == expected_root;
    }
};

}  // namespace martfl
