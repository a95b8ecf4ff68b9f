#pragma once

// Shared hand-built market instances for the test suite.

#include "sgm/datagen.hpp"
#include "sgm/model.hpp"

namespace fixtures {

using namespace sgm;

/// Three customers, three companies, table discounts. All the hand-derived
/// numbers in the tests (payments 176/280/96, offers 150/140, revenue 258.4,
/// potential 676) come from this instance.
inline MarketInstance small_market() {
    MarketInstance inst;
    inst.catalog.services = {"s1", "s2", "s3", "s4"};

    Customer x1{"x1", {"s1", "s2"}, {{"s1", Money::from_dollars(100)}, {"s2", Money::from_dollars(200)}}};
    Customer x2{"x2", {"s1"}, {{"s1", Money::from_dollars(120)}}};
    Customer x3{"x3", {"s3"}, {{"s3", Money::from_dollars(300)}}};
    inst.customers = {x1, x2, x3};

    Company y1{"y1",
               {"s1", "s2"},
               {{"s1", Money::from_dollars(30)}, {"s2", Money::from_dollars(50)}},
               {{"s1", Money::from_dollars(60)}, {"s2", Money::from_dollars(90)}},
               Money{}};
    Company y2{"y2", {"s1"}, {{"s1", Money::from_dollars(20)}}, {{"s1", Money::from_dollars(50)}}, Money{}};
    Company y3{"y3",
               {"s3", "s4"},
               {{"s3", Money::from_dollars(40)}, {"s4", Money::from_dollars(40)}},
               {{"s3", Money::from_dollars(80)}, {"s4", Money::from_dollars(70)}},
               Money{}};
    inst.companies = {y1, y2, y3};

    inst.lambda = Rat(9, 10);
    inst.discount = TableDiscount{{{1, 1.0}, {2, 0.8}, {3, 0.7}}};
    inst.penalty_xi = default_penalty(inst.customers);
    return inst;
}

}  // namespace fixtures
