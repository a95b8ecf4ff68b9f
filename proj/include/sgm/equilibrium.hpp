#pragma once

#include "sgm/allocation.hpp"
#include "sgm/follower.hpp"
#include "sgm/leader.hpp"
#include "sgm/model.hpp"
#include "sgm/partitions.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace sgm {

/// What a company can reach by changing only its own coalition request.
/// strict follows the exact-match team rule literally; permissive follows the
/// join moves of the potential-function argument.
enum class DeviationSemantics { strict, permissive };

using PartitionBlocks = std::vector<std::set<AgentId>>;

inline PartitionBlocks sorted_blocks(PartitionBlocks blocks) {
    std::sort(blocks.begin(), blocks.end());
    return blocks;
}

inline std::string partition_key(const PartitionBlocks& blocks) {
    std::ostringstream os;
    for (const auto& b : sorted_blocks(blocks)) {
        for (const auto& a : b) os << a << ',';
        os << '|';
    }
    return os.str();
}

struct DynamicsStep {
    CompanyId agent;
    std::string move;
    Rat delta_revenue;
    Rat delta_potential;
};

struct Witness {
    CompanyId agent;
    std::string move;
    Rat delta;
};

struct EquilibriumReport {
    FollowerProfile profile;
    bool is_ne = false;
    bool converged = true;  // false when dynamics hit max_moves or a cycle
    std::optional<Witness> witness;
    Rat potential_value;
    std::vector<DynamicsStep> steps;
};

namespace detail {

inline OfferModel exact_only(OfferModel model) {
    model.throw_on_mc = true;  // NE checks must stay decidable
    return model;
}

}  // namespace detail

/// Candidate profiles reachable by company y changing only its own choice.
/// Permissive join moves are realized as the corresponding partition move.
inline std::vector<FollowerProfile> deviation_set(const CompanyId& y, const FollowerProfile& spf,
                                                  const MarketInstance& inst,
                                                  DeviationSemantics semantics) {
    std::vector<FollowerProfile> out;
    auto f = teams_from_profile(spf, inst);
    std::size_t own = f.owner.at(y);

    if (semantics == DeviationSemantics::strict) {
        if (f.teams[own].partners.size() > 1) {
            FollowerProfile solo = spf;
            solo.choice[y] = {y};
            out.push_back(std::move(solo));
        }
        // Joining a team requires matching its common strategy, which must
        // already name y.
        for (std::size_t mi = 0; mi < f.teams.size(); ++mi) {
            if (mi == own) continue;
            const auto& common = spf.choice.at(*f.teams[mi].partners.begin());
            if (common.count(y)) {
                FollowerProfile join = spf;
                join.choice[y] = common;
                out.push_back(std::move(join));
            }
        }
        return out;
    }

    // permissive: leave to a singleton, or join any other team wholesale.
    auto blocks = formation_blocks(f);
    auto moved = [&](std::size_t target) {
        PartitionBlocks next;
        for (std::size_t mi = 0; mi < blocks.size(); ++mi) {
            std::set<CompanyId> b = blocks[mi];
            if (mi == own) b.erase(y);
            if (mi == target) b.insert(y);
            if (!b.empty()) next.push_back(std::move(b));
        }
        if (target == blocks.size()) next.push_back({y});  // new singleton
        return profile_from_formation_blocks(next);
    };
    if (f.teams[own].partners.size() > 1) out.push_back(moved(blocks.size()));
    for (std::size_t mi = 0; mi < blocks.size(); ++mi)
        if (mi != own) out.push_back(moved(mi));
    return out;
}

/// Checks every company's every deviation against its own revenue.
inline EquilibriumReport verify_follower_ne(const FollowerProfile& spf,
                                            const std::vector<Task>& tasks,
                                            const MarketInstance& inst, const OfferModel& model_in,
                                            DeviationSemantics semantics) {
    OfferModel model = detail::exact_only(model_in);
    EquilibriumReport rep;
    rep.profile = spf;
    auto f = teams_from_profile(spf, inst);
    auto table = TeamOfferTable::build(f, inst);
    rep.potential_value = potential_of_formation(f, table, tasks, inst, model);
    rep.is_ne = true;

    for (const auto& y : inst.companies) {
        Rat base = company_revenue_in_formation(y.id, f, table, tasks, inst, model);
        for (const auto& cand : deviation_set(y.id, spf, inst, semantics)) {
            Rat alt = company_revenue(y.id, cand, tasks, inst, model);
            if (alt > base) {
                rep.is_ne = false;
                rep.witness = Witness{y.id, partition_key(formation_blocks(teams_from_profile(cand, inst))),
                                      alt - base};
                return rep;
            }
        }
    }
    return rep;
}

/// Round-robin best-response dynamics. Each accepted move is the deviator's
/// best strictly improving option; terminates at an NE or when max_moves or a
/// repeated (partition, turn) state is hit.
inline EquilibriumReport best_response_dynamics(const FollowerProfile& start,
                                                const std::vector<Task>& tasks,
                                                const MarketInstance& inst,
                                                const OfferModel& model_in,
                                                DeviationSemantics semantics, int max_moves = 500) {
    OfferModel model = detail::exact_only(model_in);
    EquilibriumReport rep;
    rep.profile = start;
    std::unordered_set<std::string> seen;
    int moves = 0;
    std::size_t turn = 0, quiet = 0;
    const std::size_t n = inst.companies.size();

    while (quiet < n) {
        const CompanyId& y = inst.companies[turn].id;
        auto f = teams_from_profile(rep.profile, inst);
        auto table = TeamOfferTable::build(f, inst);
        Rat base = company_revenue_in_formation(y, f, table, tasks, inst, model);
        Rat phi = potential_of_formation(f, table, tasks, inst, model);

        std::optional<FollowerProfile> best;
        Rat best_delta(0);
        for (const auto& cand : deviation_set(y, rep.profile, inst, semantics)) {
            Rat delta = company_revenue(y, cand, tasks, inst, model) - base;
            if (delta > best_delta) { best_delta = delta; best = cand; }
        }

        if (best) {
            Rat phi_after = potential(*best, tasks, inst, model);
            rep.profile = *best;
            rep.steps.push_back({y, partition_key(formation_blocks(teams_from_profile(*best, inst))),
                                 best_delta, phi_after - phi});
            quiet = 0;
            if (++moves >= max_moves) { rep.converged = false; break; }
            std::string state = partition_key(formation_blocks(teams_from_profile(rep.profile, inst))) +
                                "#" + std::to_string(turn);
            if (!seen.insert(state).second) { rep.converged = false; break; }
        } else {
            ++quiet;
        }
        turn = (turn + 1) % n;
    }

    auto f = teams_from_profile(rep.profile, inst);
    auto table = TeamOfferTable::build(f, inst);
    rep.potential_value = potential_of_formation(f, table, tasks, inst, model);
    rep.is_ne = rep.converged;
    return rep;
}

struct PartitionEvaluation {
    PartitionBlocks blocks;
    bool is_ne = false;
    Rat phi;
};

/// Exhaustive oracle over all team partitions (|Y| capped).
inline std::vector<PartitionEvaluation> brute_force_follower_ne(const std::vector<Task>& tasks,
                                                                const MarketInstance& inst,
                                                                const OfferModel& model,
                                                                DeviationSemantics semantics,
                                                                std::size_t cap = 8) {
    std::vector<CompanyId> ids;
    for (const auto& y : inst.companies) ids.push_back(y.id);
    std::vector<PartitionEvaluation> out;
    for (const auto& blocks : all_partitions(ids, cap)) {
        auto spf = profile_from_formation_blocks(blocks);
        auto rep = verify_follower_ne(spf, tasks, inst, model, semantics);
        out.push_back({blocks, rep.is_ne, rep.potential_value});
    }
    return out;
}

struct UniquenessProbe {
    bool unique_max = false;
    long long ne_count = 0;
    bool corollary_holds = false;  // unique_max implies exactly one NE
};

inline UniquenessProbe uniqueness_probe_follower(const std::vector<Task>& tasks,
                                                 const MarketInstance& inst,
                                                 const OfferModel& model,
                                                 DeviationSemantics semantics,
                                                 std::size_t cap = 8) {
    auto evals = brute_force_follower_ne(tasks, inst, model, semantics, cap);
    Rat best = evals.front().phi;
    for (const auto& e : evals) best = std::max(best, e.phi);
    long long at_max = 0;
    UniquenessProbe probe;
    for (const auto& e : evals) {
        if (e.phi == best) ++at_max;
        if (e.is_ne) ++probe.ne_count;
    }
    probe.unique_max = at_max == 1;
    probe.corollary_holds = !probe.unique_max || probe.ne_count == 1;
    return probe;
}

struct BrOptions {
    std::size_t brute_force_cap = 8;
    double greedy_threshold = 0.3;  // fallback start for large |Y|
    int max_moves = 500;
};

/// Deterministic follower best response: the potential-maximising partition
/// (lexicographic tie-break) below the cap, best-response dynamics from the
/// greedy formation above it.
inline FollowerProfile follower_br(const std::vector<Task>& tasks, const MarketInstance& inst,
                                   const OfferModel& model, DeviationSemantics semantics,
                                   std::uint64_t seed, const BrOptions& opts = {}) {
    if (inst.companies.size() <= opts.brute_force_cap) {
        std::vector<CompanyId> ids;
        for (const auto& y : inst.companies) ids.push_back(y.id);
        OfferModel exact = detail::exact_only(model);
        std::optional<PartitionBlocks> best_blocks;
        Rat best_phi;
        for (const auto& blocks : all_partitions(ids, opts.brute_force_cap)) {
            auto spf = profile_from_formation_blocks(blocks);
            Rat phi = potential(spf, tasks, inst, exact);
            auto canon = sorted_blocks(blocks);
            if (!best_blocks || phi > best_phi ||
                (phi == best_phi && canon < sorted_blocks(*best_blocks))) {
                best_blocks = blocks;
                best_phi = phi;
            }
        }
        return profile_from_formation_blocks(*best_blocks);
    }
    auto start = profile_from_formation_blocks(
        formation_blocks(greedy_team_formation(inst, opts.greedy_threshold, seed)));
    auto rep = best_response_dynamics(start, tasks, inst, model, semantics, opts.max_moves);
    if (!rep.converged) {
        std::ostringstream os;
        os << "follower_br: dynamics did not converge; trace:";
        for (const auto& s : rep.steps) os << ' ' << s.agent << "->" << s.move;
        throw std::runtime_error(os.str());
    }
    return rep.profile;
}

// ---------------------------------------------------------------------------
// Stackelberg search (small instances)
// ---------------------------------------------------------------------------

struct StackelbergResult {
    bool found = false;
    LeaderProfile spl;
    FollowerProfile spf;
    std::vector<Task> tasks;
    std::map<CustomerId, Money> utilities;  // u_x at the SE
    Money leader_cost{};                    // Phi(spl) = sum of utilities
    bool cost_min_is_se = false;
    Money min_cost{};                       // minimum Phi(spl) over all partitions
    PartitionBlocks min_cost_partition;
};

namespace detail {

struct LeaderEval {
    std::vector<Task> tasks;
    FollowerProfile spf;
    std::map<CustomerId, Money> utilities;
    Money cost{};
};

class LeaderEvalCache {
public:
    LeaderEvalCache(const MarketInstance& inst, const OfferModel& model,
                    DeviationSemantics semantics, const BrOptions& opts)
        : inst_(inst), model_(exact_only(model)), semantics_(semantics), opts_(opts) {}

    const LeaderEval& eval(const PartitionBlocks& blocks) {
        std::string key = partition_key(blocks);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        LeaderEval e;
        e.tasks = tasks_from_profile(profile_from_blocks(blocks), inst_);
        e.spf = follower_br(e.tasks, inst_, model_, semantics_, 0, opts_);
        auto formation = teams_from_profile(e.spf, inst_);
        auto alloc = allocate(e.tasks, formation, inst_);
        for (std::size_t ki = 0; ki < e.tasks.size(); ++ki) {
            bool served = alloc.assignment[ki].has_value();
            for (const auto& x : e.tasks[ki].members) {
                Money u = customer_utility(x, e.tasks[ki], served, inst_);
                e.utilities[x] = u;
                e.cost += u;
            }
        }
        return cache_.emplace(std::move(key), std::move(e)).first->second;
    }

private:
    const MarketInstance& inst_;
    OfferModel model_;
    DeviationSemantics semantics_;
    BrOptions opts_;
    std::map<std::string, LeaderEval> cache_;
};

/// Unilateral leader re-partitions: x leaves to a singleton or joins another
/// block, mirroring the permissive follower moves.
inline std::vector<PartitionBlocks> leader_moves(const CustomerId& x, const PartitionBlocks& blocks) {
    std::size_t own = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (blocks[i].count(x)) own = i;
    std::vector<PartitionBlocks> out;
    auto moved = [&](std::size_t target) {
        PartitionBlocks next;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            std::set<AgentId> b = blocks[i];
            if (i == own) b.erase(x);
            if (i == target) b.insert(x);
            if (!b.empty()) next.push_back(std::move(b));
        }
        if (target == blocks.size()) next.push_back({x});
        return next;
    };
    if (blocks[own].size() > 1) out.push_back(moved(blocks.size()));
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (i != own) out.push_back(moved(i));
    return out;
}

}  // namespace detail

struct StackelbergOptions {
    std::size_t leader_cap = 7;
    BrOptions br;
};

/// Exhaustive Stackelberg search over canonical leader partitions: returns a
/// profile where no customer's unilateral re-partition lowers their own cost,
/// paired with the deterministic follower best response.
inline StackelbergResult solve_stackelberg_small(const MarketInstance& inst,
                                                 const OfferModel& model,
                                                 DeviationSemantics semantics,
                                                 const StackelbergOptions& opts = {}) {
    if (inst.customers.size() > opts.leader_cap)
        throw std::invalid_argument("solve_stackelberg_small: leader cap exceeded");

    std::vector<CustomerId> ids;
    for (const auto& x : inst.customers) ids.push_back(x.id);
    auto partitions = all_partitions(ids, opts.leader_cap);

    detail::LeaderEvalCache cache(inst, model, semantics, opts.br);
    StackelbergResult result;

    bool have_min = false;
    std::optional<PartitionBlocks> se_blocks;
    for (const auto& blocks : partitions) {
        const auto& e = cache.eval(blocks);
        if (!have_min || e.cost < result.min_cost) {
            result.min_cost = e.cost;
            result.min_cost_partition = sorted_blocks(blocks);
            have_min = true;
        }
        if (se_blocks) continue;  // keep scanning for the global cost minimum

        bool stable = true;
        for (const auto& x : ids) {
            Money u = e.utilities.at(x);
            for (const auto& alt : detail::leader_moves(x, blocks)) {
                if (cache.eval(alt).utilities.at(x) < u) { stable = false; break; }
            }
            if (!stable) break;
        }
        if (stable) se_blocks = blocks;
    }

    if (!se_blocks) return result;  // not found; flagged by caller
    const auto& e = cache.eval(*se_blocks);
    result.found = true;
    result.spl = profile_from_blocks(*se_blocks);
    result.spf = e.spf;
    result.tasks = e.tasks;
    result.utilities = e.utilities;
    result.leader_cost = e.cost;
    result.cost_min_is_se = sorted_blocks(*se_blocks) == result.min_cost_partition;
    return result;
}

// ---------------------------------------------------------------------------
// Proposition checkers
// ---------------------------------------------------------------------------

struct PropViolation {
    std::string detail;
};

/// No teammate may fully cover a winning member's service set at NE.
inline std::vector<PropViolation> check_prop1(const FollowerProfile& spf,
                                              const std::vector<Task>& tasks,
                                              const TeamFormation& formation,
                                              const MarketInstance& inst) {
    (void)spf;
    std::vector<PropViolation> out;
    auto alloc = allocate(tasks, formation, inst);
    for (std::size_t ki = 0; ki < tasks.size(); ++ki) {
        if (!alloc.assignment[ki]) continue;
        const Team& m = formation.teams[*alloc.assignment[ki]];
        if (m.partners.size() < 2) continue;
        for (const auto& y : m.partners) {
            const Company& cy = inst.company(y);
            bool touches = false;
            for (const auto& s : tasks[ki].required)
                if (cy.services.count(s)) { touches = true; break; }
            if (!touches) continue;
            for (const auto& yp : m.partners) {
                if (yp == y) continue;
                if (edge_weight(inst.company(yp).services, cy.services) == 1.0)
                    out.push_back({"team covering task " + std::to_string(ki) + ": " + yp +
                                   " fully covers " + y});
            }
        }
    }
    return out;
}

/// An unallocated task must not be coverable by any single company.
inline std::vector<PropViolation> check_prop2(const AllocationResult& alloc,
                                              const std::vector<Task>& tasks,
                                              const MarketInstance& inst) {
    std::vector<PropViolation> out;
    for (std::size_t ki = 0; ki < tasks.size(); ++ki) {
        if (alloc.assignment[ki]) continue;
        for (const auto& y : inst.companies) {
            auto y_mask = inst.catalog.mask_of(y.services);
            if (tasks[ki].required_mask.subset_of(y_mask))
                out.push_back({"unallocated task " + std::to_string(ki) + " coverable by " + y.id});
        }
    }
    return out;
}

struct Prop3Report {
    std::vector<Rat> welfare_values;  // total revenue per NE follower profile
    bool equal = true;
};

/// Social welfare across every follower NE for fixed leader tasks.
inline Prop3Report check_prop3(const LeaderProfile& spl, const MarketInstance& inst,
                               const OfferModel& model, DeviationSemantics semantics,
                               std::size_t cap = 8) {
    auto tasks = tasks_from_profile(spl, inst);
    Prop3Report rep;
    OfferModel exact = detail::exact_only(model);
    for (const auto& e : brute_force_follower_ne(tasks, inst, exact, semantics, cap)) {
        if (!e.is_ne) continue;
        auto spf = profile_from_formation_blocks(e.blocks);
        auto f = teams_from_profile(spf, inst);
        auto table = TeamOfferTable::build(f, inst);
        Rat welfare(0);
        for (const auto& y : inst.companies)
            welfare += company_revenue_in_formation(y.id, f, table, tasks, inst, exact);
        rep.welfare_values.push_back(welfare);
    }
    for (const auto& w : rep.welfare_values)
        if (w != rep.welfare_values.front()) rep.equal = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Potential sign-consistency falsification harness
// ---------------------------------------------------------------------------

struct SignCounterexample {
    std::size_t case_index = 0;
    CompanyId agent;
    std::string from_partition;
    std::string to_partition;
    Rat delta_revenue;
    Rat delta_potential;
};

struct SignConsistencyReport {
    long long checked = 0;
    long long agreeing = 0;
    std::vector<SignCounterexample> counterexamples;
};

/// Samples unilateral deviations and records whether sign(delta r_y) matches
/// sign(delta Phi). Measures the ordinal-potential claim; asserts nothing.
inline SignConsistencyReport potential_sign_consistency(
    const std::vector<std::pair<const MarketInstance*, std::vector<Task>>>& cases,
    const OfferModel& model_in, DeviationSemantics semantics, std::uint64_t seed,
    int deviations_per_case = 20) {
    OfferModel model = detail::exact_only(model_in);
    SignConsistencyReport rep;
    std::mt19937_64 rng(seed);

    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const MarketInstance& inst = *cases[ci].first;
        const auto& tasks = cases[ci].second;
        std::vector<CompanyId> ids;
        for (const auto& y : inst.companies) ids.push_back(y.id);

        for (int d = 0; d < deviations_per_case; ++d) {
            // random starting partition via a random assignment of companies
            std::map<int, std::set<CompanyId>> groups;
            std::uniform_int_distribution<int> lab(0, static_cast<int>(ids.size()) - 1);
            for (const auto& y : ids) groups[lab(rng)].insert(y);
            PartitionBlocks blocks;
            for (auto& [_, b] : groups) blocks.push_back(std::move(b));
            auto spf = profile_from_formation_blocks(blocks);

            const CompanyId& y = ids[lab(rng)];
            auto candidates = deviation_set(y, spf, inst, semantics);
            if (candidates.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            const auto& cand = candidates[pick(rng)];

            Rat r0 = company_revenue(y, spf, tasks, inst, model);
            Rat r1 = company_revenue(y, cand, tasks, inst, model);
            Rat p0 = potential(spf, tasks, inst, model);
            Rat p1 = potential(cand, tasks, inst, model);
            Rat dr = r1 - r0, dp = p1 - p0;
            auto sign = [](const Rat& v) { return v > 0 ? 1 : v < 0 ? -1 : 0; };

            ++rep.checked;
            if (sign(dr) == sign(dp)) {
                ++rep.agreeing;
            } else {
                rep.counterexamples.push_back(
                    {ci, y, partition_key(blocks),
                     partition_key(formation_blocks(teams_from_profile(cand, inst))), dr, dp});
            }
        }
    }
    return rep;
}

}  // namespace sgm
