#pragma once

#include "sgm/model.hpp"
#include "sgm/partitions.hpp"
#include "sgm/socialnet.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgm {

/// Follower-game strategy profile: the coalition each company asks for.
struct FollowerProfile {
    std::map<CompanyId, std::set<CompanyId>> choice;  // A_y, with y in A_y
};

struct TeamFormation {
    std::vector<Team> teams;
    std::map<CompanyId, std::size_t> owner;  // company -> index into teams
};

inline TeamFormation formation_from_blocks(const std::vector<std::set<CompanyId>>& blocks,
                                           const MarketInstance& inst) {
    TeamFormation f;
    for (const auto& b : blocks) {
        std::size_t idx = f.teams.size();
        f.teams.push_back(derive_team(b, inst));
        for (const auto& y : b) f.owner[y] = idx;
    }
    return f;
}

inline FollowerProfile profile_from_formation_blocks(const std::vector<std::set<CompanyId>>& blocks) {
    FollowerProfile spf;
    for (const auto& b : blocks)
        for (const auto& y : b) spf.choice[y] = b;
    return spf;
}

/// Groups companies with identical choice sets into teams (Definition 1).
inline TeamFormation teams_from_profile(const FollowerProfile& spf, const MarketInstance& inst) {
    std::map<std::set<CompanyId>, std::set<CompanyId>> groups;
    for (const auto& [y, a] : spf.choice) {
        if (!a.count(y)) throw std::invalid_argument("profile choice must contain chooser: " + y);
        groups[a].insert(y);
    }
    std::vector<std::set<CompanyId>> blocks;
    blocks.reserve(groups.size());
    for (const auto& [_, members] : groups) blocks.push_back(members);
    return formation_from_blocks(blocks, inst);
}

inline std::vector<std::set<CompanyId>> formation_blocks(const TeamFormation& f) {
    std::vector<std::set<CompanyId>> blocks;
    blocks.reserve(f.teams.size());
    for (const auto& m : f.teams) blocks.push_back(m.partners);
    return blocks;
}

/// One pass of the greedy team builder over an already-ordered company list:
/// the first unallocated company seeds a team and absorbs every later
/// unallocated company whose similarity to the seed is at or below threshold.
inline std::vector<std::set<CompanyId>> greedy_team_blocks(
    const std::vector<std::pair<CompanyId, ServiceSet>>& ordered, double threshold) {
    std::vector<std::set<CompanyId>> blocks;
    std::vector<bool> allocated(ordered.size(), false);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (allocated[i]) continue;
        std::set<CompanyId> team{ordered[i].first};
        allocated[i] = true;
        for (std::size_t j = 0; j < ordered.size(); ++j) {
            if (allocated[j]) continue;
            if (alg3_similarity(ordered[i].second, ordered[j].second) <= threshold) {
                team.insert(ordered[j].first);
                allocated[j] = true;
            }
        }
        blocks.push_back(std::move(team));
    }
    return blocks;
}

inline TeamFormation greedy_team_formation(const MarketInstance& inst, double threshold,
                                           std::uint64_t seed) {
    if (threshold < 0.0 || threshold > 1.0)
        throw std::invalid_argument("greedy_team_formation: threshold outside [0,1]");
    std::vector<std::pair<CompanyId, ServiceSet>> ordered;
    ordered.reserve(inst.companies.size());
    for (const auto& y : inst.companies) ordered.emplace_back(y.id, y.services);
    std::mt19937_64 rng(seed);
    std::shuffle(ordered.begin(), ordered.end(), rng);
    return formation_from_blocks(greedy_team_blocks(ordered, threshold), inst);
}

// ---------------------------------------------------------------------------
// Offer model
// ---------------------------------------------------------------------------

struct OfferModel {
    enum class Mode { deterministic_min, uniform_iid };
    Mode mode = Mode::deterministic_min;
    int mc_samples = 100000;
    std::uint64_t seed = 0;
    bool force_monte_carlo = false;  // estimator path even when analytic exists
    bool throw_on_mc = false;        // equilibrium checks require exact probabilities
};

/// Support of a per-service team offer price; a point mass when lo == hi.
struct OfferDist {
    Money lo{};
    Money hi{};
    bool point() const { return lo == hi; }
};

/// Per-team offer bounds for service s: partners not offering s are excluded
/// (the infinite-offer sentinel of the offer model).
inline OfferDist team_offer(const Team& m, const ServiceId& s, const MarketInstance& inst,
                            const OfferModel& model) {
    if (!m.pooled.count(s)) throw std::invalid_argument("team_offer: service not pooled: " + s);
    Money lo{std::numeric_limits<std::int64_t>::max()}, hi{std::numeric_limits<std::int64_t>::min()};
    for (const auto& y : m.partners) {
        auto it = inst.company(y).offers.find(s);
        if (it == inst.company(y).offers.end()) continue;
        lo = std::min(lo, it->second);
        hi = std::max(hi, it->second);
    }
    if (model.mode == OfferModel::Mode::deterministic_min) return {lo, lo};
    return {lo, hi};
}

/// Cached per-formation offer bounds, indexed [team][catalog index].
struct TeamOfferTable {
    std::vector<std::vector<std::optional<OfferDist>>> bounds;

    static TeamOfferTable build(const TeamFormation& f, const MarketInstance& inst) {
        TeamOfferTable t;
        const std::size_t ns = inst.catalog.services.size();
        t.bounds.assign(f.teams.size(), std::vector<std::optional<OfferDist>>(ns));
        for (std::size_t mi = 0; mi < f.teams.size(); ++mi) {
            for (const auto& y : f.teams[mi].partners) {
                const Company& comp = inst.company(y);
                for (const auto& [s, o] : comp.offers) {
                    std::size_t si = inst.catalog.index_of(s);
                    auto& slot = t.bounds[mi][si];
                    if (!slot) slot = OfferDist{o, o};
                    else {
                        slot->lo = std::min(slot->lo, o);
                        slot->hi = std::max(slot->hi, o);
                    }
                }
            }
        }
        return t;
    }
};

/// Support of a team's total offer for one task: componentwise sum of the
/// per-service supports. With at most one non-degenerate component the total
/// is exactly uniform on [lo, hi].
struct TaskOfferDesc {
    Money lo{};
    Money hi{};
    int nondegenerate = 0;
};

inline TaskOfferDesc task_offer_desc(std::size_t team_index, const Task& k,
                                     const TeamOfferTable& table, const MarketInstance& inst) {
    TaskOfferDesc d;
    for (const auto& s : k.required) {
        const auto& slot = table.bounds[team_index][inst.catalog.index_of(s)];
        if (!slot) throw std::logic_error("task_offer_desc: team not eligible for task");
        d.lo += slot->lo;
        d.hi += slot->hi;
        if (!slot->point()) ++d.nondegenerate;
    }
    return d;
}

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33; x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33; x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

inline std::uint64_t task_seed(const OfferModel& model, const Task& k) {
    std::uint64_t h = model.seed ^ 0x9e3779b97f4a7c15ULL;
    for (const auto& x : k.members)
        for (char c : x) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return h;
}

// Deterministic winner split: probability 1/|tied| on the strict minimum set.
inline std::vector<Rat> split_min(const std::vector<std::pair<std::size_t, Money>>& offers,
                                  std::size_t n_teams) {
    std::vector<Rat> pr(n_teams, Rat(0));
    Money best{std::numeric_limits<std::int64_t>::max()};
    for (const auto& [_, o] : offers) best = std::min(best, o);
    std::vector<std::size_t> tied;
    for (const auto& [mi, o] : offers)
        if (o == best) tied.push_back(mi);
    for (auto mi : tied) pr[mi] = Rat(1, static_cast<long long>(tied.size()));
    return pr;
}

}  // namespace detail

/// Indices of teams able to serve the task: R_k subset of R_m.
inline std::vector<std::size_t> eligible_teams(const Task& k, const TeamFormation& f) {
    std::vector<std::size_t> out;
    for (std::size_t mi = 0; mi < f.teams.size(); ++mi)
        if (k.required_mask.subset_of(f.teams[mi].pooled_mask)) out.push_back(mi);
    return out;
}

/// Monte Carlo estimate of the per-team win probabilities for one task,
/// sharing draws across teams so the probabilities sum to exactly 1.
inline std::vector<Rat> win_probabilities_sampled(const Task& k, const TeamFormation& f,
                                                  const TeamOfferTable& table,
                                                  const MarketInstance& inst,
                                                  const OfferModel& model) {
    std::vector<Rat> pr(f.teams.size(), Rat(0));
    auto elig = eligible_teams(k, f);
    if (elig.empty()) return pr;

    std::mt19937_64 rng(detail::task_seed(model, k));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Rat> wins(f.teams.size(), Rat(0));
    const int samples = std::max(1, model.mc_samples);
    std::vector<double> total(elig.size());
    for (int it = 0; it < samples; ++it) {
        for (std::size_t e = 0; e < elig.size(); ++e) {
            double sum = 0.0;
            for (const auto& s : k.required) {
                const auto& slot = table.bounds[elig[e]][inst.catalog.index_of(s)];
                sum += slot->point()
                           ? static_cast<double>(slot->lo.cents)
                           : static_cast<double>(slot->lo.cents) +
                                 unit(rng) * static_cast<double>((slot->hi - slot->lo).cents);
            }
            total[e] = sum;
        }
        double best = *std::min_element(total.begin(), total.end());
        std::vector<std::size_t> tied;
        for (std::size_t e = 0; e < elig.size(); ++e)
            if (total[e] == best) tied.push_back(e);
        for (auto e : tied) wins[elig[e]] += Rat(1, static_cast<long long>(tied.size()));
    }
    for (std::size_t mi = 0; mi < f.teams.size(); ++mi) pr[mi] = wins[mi] / samples;
    return pr;
}

/// Win probabilities Pr(m,k) for every team on one task. Deterministic and
/// analytic uniform cases are exact rationals; everything else is Monte Carlo.
inline std::vector<Rat> win_probabilities(const Task& k, const TeamFormation& f,
                                          const TeamOfferTable& table, const MarketInstance& inst,
                                          const OfferModel& model) {
    std::vector<Rat> pr(f.teams.size(), Rat(0));
    auto elig = eligible_teams(k, f);
    if (elig.empty()) return pr;

    if (model.mode == OfferModel::Mode::deterministic_min) {
        std::vector<std::pair<std::size_t, Money>> offers;
        for (auto mi : elig) offers.emplace_back(mi, task_offer_desc(mi, k, table, inst).lo);
        return detail::split_min(offers, f.teams.size());
    }

    std::vector<TaskOfferDesc> desc;
    desc.reserve(elig.size());
    for (auto mi : elig) desc.push_back(task_offer_desc(mi, k, table, inst));

    if (!model.force_monte_carlo) {
        bool all_point = std::all_of(desc.begin(), desc.end(),
                                     [](const TaskOfferDesc& d) { return d.lo == d.hi; });
        if (all_point) {
            std::vector<std::pair<std::size_t, Money>> offers;
            for (std::size_t e = 0; e < elig.size(); ++e) offers.emplace_back(elig[e], desc[e].lo);
            return detail::split_min(offers, f.teams.size());
        }
        if (elig.size() == 1) {
            pr[elig[0]] = Rat(1);
            return pr;
        }
        if (elig.size() == 2) {
            // Exactly one of the two is a true (possibly shifted) uniform.
            int a = -1, b = -1;
            if (desc[0].lo != desc[0].hi && desc[1].lo == desc[1].hi) { a = 0; b = 1; }
            if (desc[1].lo != desc[1].hi && desc[0].lo == desc[0].hi) { a = 1; b = 0; }
            if (a >= 0 && desc[a].nondegenerate == 1) {
                Rat p;  // Pr(uniform A < point b)
                Money point = desc[b].lo;
                if (point <= desc[a].lo) p = Rat(0);
                else if (point >= desc[a].hi) p = Rat(1);
                else p = Rat((point - desc[a].lo).cents, (desc[a].hi - desc[a].lo).cents);
                pr[elig[a]] = p;
                pr[elig[b]] = Rat(1) - p;
                return pr;
            }
        }
    }
    if (model.throw_on_mc)
        throw std::logic_error("win_probabilities: Monte Carlo needed but exact mode required");
    return win_probabilities_sampled(k, f, table, inst, model);
}

inline Rat win_probability(std::size_t team_index, const Task& k, const TeamFormation& f,
                           const MarketInstance& inst, const OfferModel& model) {
    auto table = TeamOfferTable::build(f, inst);
    return win_probabilities(k, f, table, inst, model)[team_index];
}

/// E_m: sum over eligible tasks of win probability times total task payment.
inline Rat expected_team_profit(std::size_t team_index, const std::vector<Task>& tasks,
                                const TeamFormation& f, const TeamOfferTable& table,
                                const MarketInstance& inst, const OfferModel& model) {
    Rat e(0);
    for (const auto& k : tasks) {
        if (!k.required_mask.subset_of(f.teams[team_index].pooled_mask)) continue;
        Rat p = win_probabilities(k, f, table, inst, model)[team_index];
        if (p != 0) e += p * rat(k.total_payment());
    }
    return e;
}

inline Rat expected_team_profit(std::size_t team_index, const std::vector<Task>& tasks,
                                const TeamFormation& f, const MarketInstance& inst,
                                const OfferModel& model) {
    auto table = TeamOfferTable::build(f, inst);
    return expected_team_profit(team_index, tasks, f, table, inst, model);
}

/// r_y = lambda * E_m / |Y_m| - own service costs (- ops cost by default).
inline Rat company_revenue_in_formation(const CompanyId& y, const TeamFormation& f,
                                        const TeamOfferTable& table, const std::vector<Task>& tasks,
                                        const MarketInstance& inst, const OfferModel& model) {
    std::size_t mi = f.owner.at(y);
    Rat share = inst.lambda * expected_team_profit(mi, tasks, f, table, inst, model) /
                Rat(static_cast<long long>(f.teams[mi].partners.size()));
    const Company& comp = inst.company(y);
    Money costs{};
    for (const auto& [_, c] : comp.costs) costs += c;
    if (inst.revenue_includes_ops_cost) costs += comp.ops_cost;
    return share - rat(costs);
}

inline Rat company_revenue(const CompanyId& y, const FollowerProfile& spf,
                           const std::vector<Task>& tasks, const MarketInstance& inst,
                           const OfferModel& model) {
    auto f = teams_from_profile(spf, inst);
    auto table = TeamOfferTable::build(f, inst);
    return company_revenue_in_formation(y, f, table, tasks, inst, model);
}

/// Potential Phi: total expected profit across teams. Depends only on the
/// induced partition, not on the profile labels.
inline Rat potential_of_formation(const TeamFormation& f, const TeamOfferTable& table,
                                  const std::vector<Task>& tasks, const MarketInstance& inst,
                                  const OfferModel& model) {
    Rat phi(0);
    for (std::size_t mi = 0; mi < f.teams.size(); ++mi)
        phi += expected_team_profit(mi, tasks, f, table, inst, model);
    return phi;
}

inline Rat potential(const FollowerProfile& spf, const std::vector<Task>& tasks,
                     const MarketInstance& inst, const OfferModel& model) {
    auto f = teams_from_profile(spf, inst);
    auto table = TeamOfferTable::build(f, inst);
    return potential_of_formation(f, table, tasks, inst, model);
}

}  // namespace sgm
