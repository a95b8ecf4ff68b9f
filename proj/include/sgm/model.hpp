#pragma once

#include "sgm/discount.hpp"
#include "sgm/money.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sgm {

using ServiceId = std::string;
using CustomerId = std::string;
using CompanyId = std::string;
using AgentId = std::string;

using ServiceSet = std::set<ServiceId>;

/// Bitset over catalog indices; the fast representation behind the string
/// service sets on hot paths (eligibility checks, clustering).
struct ServiceMask {
    std::vector<std::uint64_t> words;

    void resize(std::size_t nbits) { words.assign((nbits + 63) / 64, 0); }
    void set(std::size_t i) { words[i / 64] |= (std::uint64_t{1} << (i % 64)); }
    bool test(std::size_t i) const { return (words[i / 64] >> (i % 64)) & 1; }

    bool subset_of(const ServiceMask& other) const {
        for (std::size_t w = 0; w < words.size(); ++w)
            if (words[w] & ~other.words[w]) return false;
        return true;
    }
    int intersection_count(const ServiceMask& other) const {
        int n = 0;
        for (std::size_t w = 0; w < words.size(); ++w)
            n += __builtin_popcountll(words[w] & other.words[w]);
        return n;
    }
    int union_count(const ServiceMask& other) const {
        int n = 0;
        for (std::size_t w = 0; w < words.size(); ++w)
            n += __builtin_popcountll(words[w] | other.words[w]);
        return n;
    }
    int count() const {
        int n = 0;
        for (auto w : words) n += __builtin_popcountll(w);
        return n;
    }
    friend bool operator==(const ServiceMask&, const ServiceMask&) = default;
};

struct ServiceCatalog {
    std::vector<ServiceId> services;  // unique, order fixed at construction

    std::size_t index_of(const ServiceId& s) const {
        auto it = std::find(services.begin(), services.end(), s);
        if (it == services.end()) throw std::invalid_argument("unknown service: " + s);
        return static_cast<std::size_t>(it - services.begin());
    }
    ServiceMask mask_of(const ServiceSet& set) const {
        ServiceMask m;
        m.resize(services.size());
        for (const auto& s : set) m.set(index_of(s));
        return m;
    }
};

struct Customer {
    CustomerId id;
    ServiceSet needs;                   // S_x
    std::map<ServiceId, Money> prices;  // p_x(s), keyed exactly by needs
};

struct Company {
    CompanyId id;
    ServiceSet services;                // S_y
    std::map<ServiceId, Money> costs;   // c_y(s)
    std::map<ServiceId, Money> offers;  // o_y(s) >= c_y(s)
    Money ops_cost{};                   // fixed operating cost charged in r_y
};

struct MarketInstance {
    ServiceCatalog catalog;
    std::vector<Customer> customers;
    std::vector<Company> companies;
    Rat lambda = Rat(9, 10);  // retained fraction of team profit, in (0,1]
    Money penalty_xi{};       // utility of a failed task; must dominate any payment
    DiscountModel discount = NormalizedExpDiscount{0.0};
    bool revenue_includes_ops_cost = true;

    const Customer& customer(const CustomerId& id) const {
        for (const auto& c : customers)
            if (c.id == id) return c;
        throw std::invalid_argument("unknown customer: " + id);
    }
    const Company& company(const CompanyId& id) const {
        for (const auto& c : companies)
            if (c.id == id) return c;
        throw std::invalid_argument("unknown company: " + id);
    }
};

/// Customer coalition with pooled requirements and discounted payments.
struct Task {
    std::set<CustomerId> members;          // X_k
    ServiceSet required;                   // R_k = union of members' needs
    std::map<ServiceId, int> demand;       // d^k_s
    std::map<ServiceId, Money> payments;   // Pay^k_s
    ServiceMask required_mask;             // over inst.catalog

    Money total_payment() const {
        Money t{};
        for (const auto& [s, p] : payments) t += p;
        return t;
    }
};

/// Company coalition pooling service coverage.
struct Team {
    std::set<CompanyId> partners;        // Y_m
    ServiceSet pooled;                   // R_m = union of partners' services
    std::map<ServiceId, int> multiplicity;  // q^m_s
    ServiceMask pooled_mask;             // over inst.catalog
};

struct Violation {
    std::string invariant;
    std::string witness;
};

inline Task derive_task(const std::set<CustomerId>& members, const MarketInstance& inst) {
    if (members.empty()) throw std::invalid_argument("task members must be non-empty");
    Task k;
    k.members = members;
    for (const auto& id : members) {
        const Customer& x = inst.customer(id);
        for (const auto& s : x.needs) {
            k.required.insert(s);
            k.demand[s] += 1;
        }
    }
    for (const auto& s : k.required) {
        std::vector<Money> prices;
        for (const auto& id : members) {
            const Customer& x = inst.customer(id);
            auto it = x.prices.find(s);
            if (it != x.prices.end()) prices.push_back(it->second);
        }
        k.payments[s] = discounted_sum(prices, k.demand.at(s), inst.discount);
    }
    k.required_mask = inst.catalog.mask_of(k.required);
    return k;
}

inline Team derive_team(const std::set<CompanyId>& partners, const MarketInstance& inst) {
    if (partners.empty()) throw std::invalid_argument("team partners must be non-empty");
    Team m;
    m.partners = partners;
    for (const auto& id : partners) {
        const Company& y = inst.company(id);
        for (const auto& s : y.services) {
            m.pooled.insert(s);
            m.multiplicity[s] += 1;
        }
    }
    m.pooled_mask = inst.catalog.mask_of(m.pooled);
    return m;
}

/// True iff blocks are non-empty, pairwise disjoint, and cover the universe.
inline bool check_feasible_partition(const std::vector<std::set<AgentId>>& blocks,
                                     const std::set<AgentId>& universe) {
    std::set<AgentId> seen;
    for (const auto& b : blocks) {
        if (b.empty()) return false;
        for (const auto& a : b)
            if (!seen.insert(a).second) return false;
    }
    return seen == universe;
}

inline std::vector<Violation> validate_instance(const MarketInstance& inst) {
    std::vector<Violation> out;
    if (inst.catalog.services.empty()) out.push_back({"catalog non-empty", ""});
    {
        std::set<ServiceId> uniq(inst.catalog.services.begin(), inst.catalog.services.end());
        if (uniq.size() != inst.catalog.services.size())
            out.push_back({"service ids unique", ""});
    }
    const std::set<ServiceId> catalog_set(inst.catalog.services.begin(), inst.catalog.services.end());

    for (const auto& x : inst.customers) {
        if (x.needs.empty()) out.push_back({"customer needs non-empty", x.id});
        std::set<ServiceId> keys;
        for (const auto& [s, p] : x.prices) {
            keys.insert(s);
            if (p <= Money{0}) out.push_back({"customer price > 0", x.id + "/" + s});
        }
        if (keys != x.needs) out.push_back({"prices keyed exactly by needs", x.id});
    }

    ServiceSet covered;
    for (const auto& y : inst.companies) {
        std::set<ServiceId> ckeys, okeys;
        for (const auto& [s, c] : y.costs) {
            ckeys.insert(s);
            if (c <= Money{0}) out.push_back({"company cost > 0", y.id + "/" + s});
        }
        for (const auto& [s, o] : y.offers) {
            okeys.insert(s);
            if (o <= Money{0}) out.push_back({"company offer > 0", y.id + "/" + s});
        }
        if (ckeys != y.services) out.push_back({"costs keyed exactly by services", y.id});
        if (okeys != y.services) out.push_back({"offers keyed exactly by services", y.id});
        for (const auto& s : y.services) {
            auto c = y.costs.find(s);
            auto o = y.offers.find(s);
            if (c != y.costs.end() && o != y.offers.end() && o->second < c->second)
                out.push_back({"offer >= cost", y.id + "/" + s});
        }
        covered.insert(y.services.begin(), y.services.end());
        if (catalog_set.size() > 1 && y.services == catalog_set)
            out.push_back({"single company covers S", y.id});
    }
    if (covered != catalog_set) out.push_back({"companies cover all services", ""});

    // p_x(s) >= the cheapest offer for s, per service.
    for (const auto& x : inst.customers) {
        for (const auto& [s, p] : x.prices) {
            Money min_offer{std::numeric_limits<std::int64_t>::max()};
            bool any = false;
            for (const auto& y : inst.companies) {
                auto it = y.offers.find(s);
                if (it != y.offers.end()) { any = true; min_offer = std::min(min_offer, it->second); }
            }
            if (any && p < min_offer)
                out.push_back({"price >= min offer", x.id + "/" + s});
        }
    }

    Money max_undiscounted{};
    for (const auto& x : inst.customers) {
        Money t{};
        for (const auto& [s, p] : x.prices) t += p;
        max_undiscounted = std::max(max_undiscounted, t);
    }
    if (!inst.customers.empty() && inst.penalty_xi <= max_undiscounted)
        out.push_back({"penalty_xi > max customer payment", ""});

    if (inst.lambda <= 0 || inst.lambda > 1) out.push_back({"lambda in (0,1]", ""});
    return out;
}

/// Default failure penalty: an order of magnitude above any undiscounted bill.
inline Money default_penalty(const std::vector<Customer>& customers) {
    Money max_total{};
    for (const auto& x : customers) {
        Money t{};
        for (const auto& [s, p] : x.prices) t += p;
        max_total = std::max(max_total, t);
    }
    return 10 * max_total;
}

}  // namespace sgm
