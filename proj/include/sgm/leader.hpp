#pragma once

#include "sgm/model.hpp"
#include "sgm/partitions.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

namespace sgm {

/// Leader-game strategy profile: the coalition each customer asks for.
struct LeaderProfile {
    std::map<CustomerId, std::set<CustomerId>> choice;  // A_x, with x in A_x
};

inline Money service_payment(const std::vector<Money>& prices, int d, const DiscountModel& model) {
    return discounted_sum(prices, d, model);
}

/// f^k_x: what customer x pays inside task k, with the per-service demand
/// discounts applied.
inline Money member_payment(const CustomerId& x, const Task& k, const MarketInstance& inst) {
    if (!k.members.count(x)) throw std::invalid_argument("customer not in task: " + x);
    const Customer& cust = inst.customer(x);
    Money total{};
    for (const auto& [s, p] : cust.prices)
        total += scale_to_cents(p, discount(inst.discount, k.demand.at(s)));
    return total;
}

/// Groups customers with identical choice sets into tasks (Definition 3 of the
/// leader game). Mismatched reciprocal choices collapse to singletons.
inline std::vector<Task> tasks_from_profile(const LeaderProfile& spl, const MarketInstance& inst) {
    std::map<std::set<CustomerId>, std::set<CustomerId>> groups;
    for (const auto& [x, a] : spl.choice) {
        if (!a.count(x)) throw std::invalid_argument("profile choice must contain chooser: " + x);
        groups[a].insert(x);
    }
    std::vector<Task> tasks;
    tasks.reserve(groups.size());
    for (const auto& [_, members] : groups) tasks.push_back(derive_task(members, inst));
    return tasks;
}

/// Customers minimise this: the discounted bill when served, the penalty when
/// their task fails.
inline Money customer_utility(const CustomerId& x, const Task& k, bool allocated,
                              const MarketInstance& inst) {
    return allocated ? member_payment(x, k, inst) : inst.penalty_xi;
}

inline LeaderProfile profile_from_blocks(const std::vector<std::set<CustomerId>>& blocks) {
    LeaderProfile spl;
    for (const auto& b : blocks)
        for (const auto& x : b) spl.choice[x] = b;
    return spl;
}

/// Canonical leader profiles, one per set partition of the customers.
inline std::vector<LeaderProfile> leader_partitions(const std::vector<Customer>& customers,
                                                    std::size_t cap = 8) {
    std::vector<CustomerId> ids;
    ids.reserve(customers.size());
    for (const auto& c : customers) ids.push_back(c.id);
    std::vector<LeaderProfile> out;
    for (const auto& p : all_partitions(ids, cap)) out.push_back(profile_from_blocks(p));
    return out;
}

inline double jaccard_distance(const ServiceMask& a, const ServiceMask& b) {
    int uni = a.union_count(b);
    if (uni == 0) return 0.0;
    return 1.0 - static_cast<double>(a.intersection_count(b)) / static_cast<double>(uni);
}

/// k-medoids-style clustering over need sets with Jaccard distance. Centroids
/// are modal sets: a service joins the centroid when at least half the
/// cluster's members need it. Deterministic for a fixed seed.
inline LeaderProfile cluster_tasks(const std::vector<Customer>& customers, std::size_t n_tasks,
                                   std::uint64_t seed, int max_iters = 50) {
    if (n_tasks < 1 || n_tasks > customers.size())
        throw std::invalid_argument("cluster_tasks: n_tasks out of range");

    // Local service index over the union of needs.
    std::vector<ServiceId> services;
    {
        ServiceSet uni;
        for (const auto& c : customers) uni.insert(c.needs.begin(), c.needs.end());
        services.assign(uni.begin(), uni.end());
    }
    std::map<ServiceId, std::size_t> sidx;
    for (std::size_t i = 0; i < services.size(); ++i) sidx[services[i]] = i;

    const std::size_t n = customers.size();
    std::vector<ServiceMask> need(n);
    for (std::size_t i = 0; i < n; ++i) {
        need[i].resize(services.size());
        for (const auto& s : customers[i].needs) need[i].set(sidx.at(s));
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<ServiceMask> centroid(n_tasks);
    for (std::size_t c = 0; c < n_tasks; ++c) centroid[c] = need[order[c]];

    std::vector<std::size_t> assign(n, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<std::size_t> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < n_tasks; ++c) {
                double d = jaccard_distance(need[i], centroid[c]);
                if (d < best) { best = d; arg = c; }
            }
            next[i] = arg;
        }

        // Reseed empty clusters with the member farthest from its centroid.
        for (std::size_t c = 0; c < n_tasks; ++c) {
            if (std::find(next.begin(), next.end(), c) != next.end()) continue;
            double worst = -1.0;
            std::size_t far = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = jaccard_distance(need[i], centroid[next[i]]);
                if (d > worst) { worst = d; far = i; }
            }
            next[far] = c;
            centroid[c] = need[far];
        }

        bool stable = iter > 0 && next == assign;
        assign = std::move(next);
        if (stable) break;

        // Modal-set centroid update.
        for (std::size_t c = 0; c < n_tasks; ++c) {
            std::vector<int> count(services.size(), 0);
            int members = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (assign[i] != c) continue;
                ++members;
                for (std::size_t s = 0; s < services.size(); ++s)
                    if (need[i].test(s)) ++count[s];
            }
            if (members == 0) continue;
            ServiceMask m;
            m.resize(services.size());
            for (std::size_t s = 0; s < services.size(); ++s)
                if (2 * count[s] >= members) m.set(s);
            centroid[c] = m;
        }
    }

    std::vector<std::set<CustomerId>> blocks(n_tasks);
    for (std::size_t i = 0; i < n; ++i) blocks[assign[i]].insert(customers[i].id);
    std::vector<std::set<CustomerId>> nonempty;
    for (auto& b : blocks)
        if (!b.empty()) nonempty.push_back(std::move(b));
    return profile_from_blocks(nonempty);
}

}  // namespace sgm
