#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgm {

/// Enumerates all set partitions of {0..n-1} in restricted-growth-string
/// order (canonical: block of element 0 first). Calls fn with the block list.
inline void for_each_partition(std::size_t n,
                               const std::function<void(const std::vector<std::vector<std::size_t>>&)>& fn) {
    if (n == 0) return;
    std::vector<std::size_t> rgs(n, 0);  // restricted growth string
    std::vector<std::size_t> maxv(n, 0);
    while (true) {
        std::size_t nblocks = 0;
        for (auto b : rgs) nblocks = std::max(nblocks, b + 1);
        std::vector<std::vector<std::size_t>> blocks(nblocks);
        for (std::size_t i = 0; i < n; ++i) blocks[rgs[i]].push_back(i);
        fn(blocks);

        // advance to the next restricted growth string
        std::size_t i = n;
        while (i-- > 1) {
            if (rgs[i] <= maxv[i - 1]) {
                ++rgs[i];
                maxv[i] = std::max(maxv[i], rgs[i]);
                for (std::size_t j = i + 1; j < n; ++j) { rgs[j] = 0; maxv[j] = maxv[i]; }
                break;
            }
        }
        if (i == 0) return;
    }
}

inline std::uint64_t bell_number(std::size_t n) {
    // Bell triangle; n <= 20 is plenty for every capped enumeration here.
    if (n > 20) throw std::invalid_argument("bell_number: n too large");
    std::vector<std::vector<std::uint64_t>> tri{{1}};
    for (std::size_t r = 1; r <= n; ++r) {
        std::vector<std::uint64_t> row{tri.back().back()};
        for (std::size_t c = 0; c < tri.back().size(); ++c)
            row.push_back(row.back() + tri.back()[c]);
        tri.push_back(std::move(row));
    }
    return tri[n][0];
}

/// Materializes partitions of the given ids as sorted blocks of ids.
template <typename Id>
std::vector<std::vector<std::set<Id>>> all_partitions(const std::vector<Id>& ids,
                                                      std::size_t cap = 8) {
    if (ids.size() > cap) throw std::invalid_argument("partition enumeration cap exceeded");
    std::vector<std::vector<std::set<Id>>> out;
    for_each_partition(ids.size(), [&](const std::vector<std::vector<std::size_t>>& blocks) {
        std::vector<std::set<Id>> p;
        for (const auto& b : blocks) {
            std::set<Id> blk;
            for (auto i : b) blk.insert(ids[i]);
            p.push_back(std::move(blk));
        }
        out.push_back(std::move(p));
    });
    return out;
}

}  // namespace sgm
