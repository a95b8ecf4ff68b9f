#pragma once

#include "sgm/money.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <variant>
#include <vector>

namespace sgm {

/// Lookup-table discount for exact unit tests. Counts beyond the last entry
/// clamp to the last factor.
struct TableDiscount {
    std::map<int, double> factors;  // count -> factor in (0,1]
};

/// delta(d) = 0.5*exp(-rate*(d-1)) + 0.4. Range (0.4, 0.9]; the discount is
/// capped at 60% no matter how many buyers pool a service.
struct ExpCapDiscount {
    double rate = 0.0;
};

/// delta(d) = 0.6*exp(-rate*(d-1)) + 0.4, so delta(1) = 1 exactly.
struct NormalizedExpDiscount {
    double rate = 0.0;
};

using DiscountModel = std::variant<TableDiscount, ExpCapDiscount, NormalizedExpDiscount>;

/// Group-buying discount factor for a service demanded by d task members.
inline double discount(const DiscountModel& model, int d) {
    if (d < 1) throw std::invalid_argument("discount demand count must be >= 1");
    struct Eval {
        int d;
        double operator()(const TableDiscount& t) const {
            if (t.factors.empty()) throw std::invalid_argument("empty discount table");
            auto it = t.factors.upper_bound(d);
            if (it == t.factors.begin()) throw std::invalid_argument("discount table has no entry <= demand");
            return std::prev(it)->second;
        }
        double operator()(const ExpCapDiscount& e) const {
            return 0.5 * std::exp(-e.rate * (d - 1)) + 0.4;
        }
        double operator()(const NormalizedExpDiscount& e) const {
            return 0.6 * std::exp(-e.rate * (d - 1)) + 0.4;
        }
    };
    return std::visit(Eval{d}, model);
}

/// Sum of per-buyer discounted prices for one service: each price is scaled by
/// delta(d) and rounded to cents individually, so the same terms appear in the
/// per-service and per-member payment totals.
inline Money discounted_sum(const std::vector<Money>& prices, int d, const DiscountModel& model) {
    double f = discount(model, d);
    Money total{};
    for (Money p : prices) total += scale_to_cents(p, f);
    return total;
}

}  // namespace sgm
