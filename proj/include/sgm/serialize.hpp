#pragma once

#include "sgm/datagen.hpp"
#include "sgm/equilibrium.hpp"
#include "sgm/model.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

namespace sgm {

using Json = nlohmann::ordered_json;

inline Json to_json(Money m) { return to_string(m); }
inline Money money_from_json(const Json& j) { return parse_money(j.get<std::string>()); }

inline Json to_json(const Rat& r) {
    Json j;
    j["num"] = boost::multiprecision::numerator(r).str();
    j["den"] = boost::multiprecision::denominator(r).str();
    return j;
}
inline Rat rat_from_json(const Json& j) {
    return Rat(boost::multiprecision::cpp_int(j.at("num").get<std::string>()),
               boost::multiprecision::cpp_int(j.at("den").get<std::string>()));
}

inline Json to_json(const DiscountModel& m) {
    Json j;
    if (const auto* t = std::get_if<TableDiscount>(&m)) {
        j["variant"] = "table";
        Json factors = Json::object();
        for (const auto& [d, f] : t->factors) factors[std::to_string(d)] = f;
        j["factors"] = factors;
    } else if (const auto* e = std::get_if<ExpCapDiscount>(&m)) {
        j["variant"] = "exp_cap";
        j["rate"] = e->rate;
    } else {
        j["variant"] = "normalized_exp";
        j["rate"] = std::get<NormalizedExpDiscount>(m).rate;
    }
    return j;
}

inline DiscountModel discount_from_json(const Json& j) {
    std::string v = j.at("variant").get<std::string>();
    if (v == "table") {
        TableDiscount t;
        for (const auto& [k, f] : j.at("factors").items()) t.factors[std::stoi(k)] = f.get<double>();
        return t;
    }
    if (v == "exp_cap") return ExpCapDiscount{j.at("rate").get<double>()};
    if (v == "normalized_exp") return NormalizedExpDiscount{j.at("rate").get<double>()};
    throw std::invalid_argument("unknown discount variant: " + v);
}

inline Json to_json(const MarketInstance& inst) {
    Json j;
    j["schema"] = "sgm-instance/1";
    j["catalog"] = inst.catalog.services;
    Json customers = Json::array();
    for (const auto& x : inst.customers) {
        Json c;
        c["id"] = x.id;
        c["needs"] = std::vector<std::string>(x.needs.begin(), x.needs.end());
        Json prices = Json::object();
        for (const auto& [s, p] : x.prices) prices[s] = to_json(p);
        c["prices"] = prices;
        customers.push_back(c);
    }
    j["customers"] = customers;
    Json companies = Json::array();
    for (const auto& y : inst.companies) {
        Json c;
        c["id"] = y.id;
        c["services"] = std::vector<std::string>(y.services.begin(), y.services.end());
        Json costs = Json::object(), offers = Json::object();
        for (const auto& [s, v] : y.costs) costs[s] = to_json(v);
        for (const auto& [s, v] : y.offers) offers[s] = to_json(v);
        c["costs"] = costs;
        c["offers"] = offers;
        c["ops_cost"] = to_json(y.ops_cost);
        companies.push_back(c);
    }
    j["companies"] = companies;
    Json econ;
    econ["lambda"] = to_json(inst.lambda);
    econ["penalty_xi"] = to_json(inst.penalty_xi);
    econ["discount"] = to_json(inst.discount);
    econ["revenue_includes_ops_cost"] = inst.revenue_includes_ops_cost;
    j["economics"] = econ;
    return j;
}

inline MarketInstance instance_from_json(const Json& j) {
    if (j.at("schema").get<std::string>() != "sgm-instance/1")
        throw std::invalid_argument("unsupported instance schema");
    MarketInstance inst;
    for (const auto& s : j.at("catalog")) inst.catalog.services.push_back(s.get<std::string>());
    for (const auto& c : j.at("customers")) {
        Customer x;
        x.id = c.at("id").get<std::string>();
        for (const auto& s : c.at("needs")) x.needs.insert(s.get<std::string>());
        for (const auto& [s, p] : c.at("prices").items()) x.prices[s] = money_from_json(p);
        inst.customers.push_back(std::move(x));
    }
    for (const auto& c : j.at("companies")) {
        Company y;
        y.id = c.at("id").get<std::string>();
        for (const auto& s : c.at("services")) y.services.insert(s.get<std::string>());
        for (const auto& [s, v] : c.at("costs").items()) y.costs[s] = money_from_json(v);
        for (const auto& [s, v] : c.at("offers").items()) y.offers[s] = money_from_json(v);
        y.ops_cost = money_from_json(c.at("ops_cost"));
        inst.companies.push_back(std::move(y));
    }
    const Json& econ = j.at("economics");
    inst.lambda = rat_from_json(econ.at("lambda"));
    inst.penalty_xi = money_from_json(econ.at("penalty_xi"));
    inst.discount = discount_from_json(econ.at("discount"));
    inst.revenue_includes_ops_cost = econ.value("revenue_includes_ops_cost", true);
    return inst;
}

inline void save_instance(const MarketInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json(inst).dump(2) << '\n';
}

inline MarketInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    Json j;
    in >> j;
    return instance_from_json(j);
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline Json equilibrium_report_json(const EquilibriumReport& rep, const MarketInstance& inst) {
    Json j;
    j["partition"] = partition_key(formation_blocks(teams_from_profile(rep.profile, inst)));
    j["is_ne"] = rep.is_ne;
    j["converged"] = rep.converged;
    j["potential"] = to_json(rep.potential_value);
    if (rep.witness) {
        Json w;
        w["agent"] = rep.witness->agent;
        w["move"] = rep.witness->move;
        w["delta"] = to_json(rep.witness->delta);
        j["witness"] = w;
    }
    Json steps = Json::array();
    for (const auto& s : rep.steps) {
        Json st;
        st["agent"] = s.agent;
        st["move"] = s.move;
        st["delta_revenue"] = to_json(s.delta_revenue);
        st["delta_potential"] = to_json(s.delta_potential);
        steps.push_back(st);
    }
    j["steps"] = steps;
    return j;
}

inline Json to_json(const SignConsistencyReport& rep) {
    Json j;
    j["checked"] = rep.checked;
    j["agreeing"] = rep.agreeing;
    Json cxs = Json::array();
    for (const auto& c : rep.counterexamples) {
        Json cx;
        cx["case"] = c.case_index;
        cx["agent"] = c.agent;
        cx["from"] = c.from_partition;
        cx["to"] = c.to_partition;
        cx["delta_revenue"] = to_json(c.delta_revenue);
        cx["delta_potential"] = to_json(c.delta_potential);
        cxs.push_back(cx);
    }
    j["counterexamples"] = cxs;
    return j;
}

}  // namespace sgm
