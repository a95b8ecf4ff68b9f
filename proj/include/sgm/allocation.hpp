#pragma once

#include "sgm/follower.hpp"
#include "sgm/model.hpp"

#include <optional>
#include <vector>

namespace sgm {

struct AllocationOptions {
    /// Stable lowest-team-index tie-break by default; last_wins reproduces the
    /// pseudocode's "offer <= min_offer" scan.
    enum class TieBreak { lowest_index, last_wins };
    /// Market-facing offers by default; cost prices the allocation the way the
    /// pseudocode's service_cost sum does.
    enum class PriceBase { offer, cost };
    TieBreak tie = TieBreak::lowest_index;
    PriceBase price = PriceBase::offer;
};

struct AllocationResult {
    std::vector<std::optional<std::size_t>> assignment;  // task index -> team index
    std::vector<Money> per_task_offer;                   // winning offer (0 when unassigned)
    long long failed_customers = 0;
};

namespace detail {

inline Money team_task_price(const Team& m, const Task& k, const MarketInstance& inst,
                             AllocationOptions::PriceBase base) {
    Money total{};
    for (const auto& s : k.required) {
        Money best{std::numeric_limits<std::int64_t>::max()};
        for (const auto& y : m.partners) {
            const Company& comp = inst.company(y);
            const auto& table = base == AllocationOptions::PriceBase::offer ? comp.offers : comp.costs;
            auto it = table.find(s);
            if (it != table.end()) best = std::min(best, it->second);
        }
        total += best;
    }
    return total;
}

}  // namespace detail

/// Cheapest eligible team for a task: the minimum summed per-service team
/// price over teams with R_k subset of R_m. Returns nothing when no team
/// qualifies.
inline std::optional<std::pair<Money, std::size_t>> find_min_offer(
    const Task& k, const TeamFormation& f, const MarketInstance& inst,
    const AllocationOptions& opts = {}) {
    std::optional<std::pair<Money, std::size_t>> best;
    for (std::size_t mi = 0; mi < f.teams.size(); ++mi) {
        if (!k.required_mask.subset_of(f.teams[mi].pooled_mask)) continue;
        Money offer = detail::team_task_price(f.teams[mi], k, inst, opts.price);
        bool take = !best || offer < best->first ||
                    (offer == best->first && opts.tie == AllocationOptions::TieBreak::last_wins);
        if (take) best = {offer, mi};
    }
    return best;
}

inline AllocationResult allocate(const std::vector<Task>& tasks, const TeamFormation& f,
                                 const MarketInstance& inst, const AllocationOptions& opts = {}) {
    AllocationResult r;
    r.assignment.resize(tasks.size());
    r.per_task_offer.resize(tasks.size());
    for (std::size_t ki = 0; ki < tasks.size(); ++ki) {
        auto hit = find_min_offer(tasks[ki], f, inst, opts);
        if (hit) {
            r.assignment[ki] = hit->second;
            r.per_task_offer[ki] = hit->first;
        } else {
            r.failed_customers += static_cast<long long>(tasks[ki].members.size());
        }
    }
    return r;
}

}  // namespace sgm
