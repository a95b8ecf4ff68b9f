#pragma once

#include "sgm/leader.hpp"
#include "sgm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgm {

struct City {
    std::string name;
    double lat = 0.0;
    double lon = 0.0;
    long long population = 0;
    double area_km2 = 0.0;
};

struct ScenarioConfig {
    int n_customers = 5000;
    std::pair<int, int> needs_range{1, 10};
    int n_companies = 30;
    std::pair<int, int> services_range{10, 30};
    std::vector<int> n_tasks_options{200, 400, 600, 800, 1000};
    double threshold_lo = 0.0;
    double threshold_hi = 0.6;
    int threshold_steps = 300;
    int replicas = 10;
    std::uint64_t seed = 0;
    double lambda = 0.9;
    std::string discount_variant = "exp_cap";  // exp_cap | normalized_exp
    std::vector<double> resolution_multipliers{1.0, 1.1, 1.2};
    double base_price_per_km2 = 10.0;
    double imaging_cost_per_km2 = 3.0;
    double ops_cost_per_service = 5000.0;
    std::pair<double, double> customer_price_factor{1.0, 1.2};
    std::pair<double, double> company_price_factor{1.0, 1.3};
};

inline ScenarioConfig scenario_preset(int id) {
    ScenarioConfig cfg;
    switch (id) {
        case 1: break;
        case 2: cfg.n_companies = 15; break;
        case 3: cfg.n_companies = 15; cfg.services_range = {30, 50}; break;
        case 4: cfg.needs_range = {1, 5}; break;
        case 5: cfg.n_customers = 10000; break;
        default: throw std::invalid_argument("scenario_preset: unknown id " + std::to_string(id));
    }
    return cfg;
}

inline std::vector<City> load_cities(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_cities: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_cities: empty file " + path);
    if (line.back() == '\r') line.pop_back();
    if (line != "name,lat,lon,population,area_km2")
        throw std::runtime_error("load_cities: unexpected header: " + line);

    std::vector<City> cities;
    std::set<std::string> names;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        City c;
        std::string field;
        try {
            if (!std::getline(row, c.name, ',')) throw std::runtime_error("missing name");
            auto next = [&](const char* what) {
                if (!std::getline(row, field, ',')) throw std::runtime_error(std::string("missing ") + what);
                return field;
            };
            c.lat = std::stod(next("lat"));
            c.lon = std::stod(next("lon"));
            c.population = std::stoll(next("population"));
            c.area_km2 = std::stod(next("area_km2"));
        } catch (const std::exception& e) {
            throw std::runtime_error("load_cities: line " + std::to_string(lineno) + ": " + e.what());
        }
        if (c.lat < -90 || c.lat > 90)
            throw std::runtime_error("load_cities: line " + std::to_string(lineno) + ": bad latitude");
        if (c.area_km2 <= 0)
            throw std::runtime_error("load_cities: line " + std::to_string(lineno) + ": area must be > 0");
        if (!names.insert(c.name).second)
            throw std::runtime_error("load_cities: duplicate city name " + c.name);
        cities.push_back(std::move(c));
    }
    return cities;
}

namespace detail {

inline const std::vector<std::string>& resolution_names() {
    static const std::vector<std::string> names{"low", "med", "high"};
    return names;
}

inline ServiceId service_name(const City& c, std::size_t res_tier) {
    return c.name + "/" + resolution_names()[res_tier];
}

}  // namespace detail

/// Synthetic coverage model standing in for orbital propagation: a satellite
/// at inclination i overflies latitudes up to |lat| <= i + 5 degrees.
inline bool city_reachable(const City& c, double inclination_deg) {
    return std::abs(c.lat) <= inclination_deg + 5.0;
}

inline std::vector<Company> gen_companies(const ScenarioConfig& cfg, const std::vector<City>& cities,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> incl(20.0, 98.0);
    std::uniform_real_distribution<double> pf(cfg.company_price_factor.first,
                                              cfg.company_price_factor.second);
    std::uniform_int_distribution<int> nsrv(cfg.services_range.first, cfg.services_range.second);

    std::vector<Company> out;
    for (int yi = 0; yi < cfg.n_companies; ++yi) {
        Company y;
        y.id = "y" + std::to_string(yi + 1);
        int want = nsrv(rng);
        double pfy = pf(rng);

        std::vector<std::pair<std::size_t, std::size_t>> pool;  // (city, res tier)
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 100)
                throw std::runtime_error("gen_companies: no inclination supports requested services");
            double inc = incl(rng);
            pool.clear();
            for (std::size_t ci = 0; ci < cities.size(); ++ci)
                if (city_reachable(cities[ci], inc))
                    for (std::size_t r = 0; r < cfg.resolution_multipliers.size(); ++r)
                        pool.emplace_back(ci, r);
            if (static_cast<int>(pool.size()) >= want) break;
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(static_cast<std::size_t>(want));

        for (const auto& [ci, r] : pool) {
            const City& c = cities[ci];
            ServiceId s = detail::service_name(c, r);
            Money cost = Money::from_dollars(cfg.imaging_cost_per_km2 * c.area_km2 * pfy);
            Money floor = Money::from_dollars(cfg.base_price_per_km2 * c.area_km2);
            std::uniform_real_distribution<double> off(cost.dollars(), floor.dollars());
            Money offer = std::clamp(Money::from_dollars(off(rng)), cost, floor);
            y.services.insert(s);
            y.costs[s] = cost;
            y.offers[s] = offer;
        }
        y.ops_cost = Money::from_dollars(cfg.ops_cost_per_service * want);
        out.push_back(std::move(y));
    }
    return out;
}

/// Customers sample needs from the services some company actually offers, so
/// the generated instance always satisfies the coverage assumption.
inline std::vector<Customer> gen_customers(const ScenarioConfig& cfg, const std::vector<City>& cities,
                                           const std::vector<ServiceId>& covered,
                                           std::uint64_t seed) {
    if (covered.empty()) throw std::invalid_argument("gen_customers: no covered services");
    if (cfg.needs_range.second > static_cast<int>(covered.size()))
        throw std::invalid_argument("gen_customers: needs range exceeds available services");

    std::map<std::string, const City*> city_by_name;
    for (const auto& c : cities) city_by_name[c.name] = &c;
    auto info = [&](const ServiceId& s) -> std::pair<double, double> {  // (area, multiplier)
        auto slash = s.rfind('/');
        const City* c = city_by_name.at(s.substr(0, slash));
        std::string res = s.substr(slash + 1);
        const auto& names = detail::resolution_names();
        std::size_t tier = std::find(names.begin(), names.end(), res) - names.begin();
        return {c->area_km2, cfg.resolution_multipliers.at(tier)};
    };

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> nneeds(cfg.needs_range.first, cfg.needs_range.second);
    std::uniform_real_distribution<double> pf(cfg.customer_price_factor.first,
                                              cfg.customer_price_factor.second);

    std::vector<Customer> out;
    std::vector<std::size_t> idx(covered.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    for (int xi = 0; xi < cfg.n_customers; ++xi) {
        Customer x;
        x.id = "x" + std::to_string(xi + 1);
        int want = nneeds(rng);
        double pfx = pf(rng);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i = 0; i < want; ++i) {
            const ServiceId& s = covered[idx[static_cast<std::size_t>(i)]];
            auto [area, mult] = info(s);
            x.needs.insert(s);
            x.prices[s] = Money::from_dollars(cfg.base_price_per_km2 * area * mult * pfx);
        }
        out.push_back(std::move(x));
    }
    return out;
}

/// Full scenario instance: companies first (their union defines the catalog),
/// then customers over the covered services.
inline MarketInstance gen_instance(const ScenarioConfig& cfg, const std::vector<City>& cities,
                                   std::uint64_t seed) {
    MarketInstance inst;
    inst.companies = gen_companies(cfg, cities, seed * 2654435761ULL + 1);

    ServiceSet covered_set;
    for (const auto& y : inst.companies) covered_set.insert(y.services.begin(), y.services.end());
    std::vector<ServiceId> covered(covered_set.begin(), covered_set.end());
    inst.catalog.services = covered;

    inst.customers = gen_customers(cfg, cities, covered, seed * 2654435761ULL + 2);
    inst.penalty_xi = default_penalty(inst.customers);

    // lambda as an exact rational with three decimals
    inst.lambda = Rat(static_cast<long long>(std::llround(cfg.lambda * 1000)), 1000);

    double rate = static_cast<double>(cfg.n_companies) / static_cast<double>(cfg.n_customers);
    if (cfg.discount_variant == "exp_cap") inst.discount = ExpCapDiscount{rate};
    else if (cfg.discount_variant == "normalized_exp") inst.discount = NormalizedExpDiscount{rate};
    else throw std::invalid_argument("gen_instance: unknown discount variant " + cfg.discount_variant);
    return inst;
}

/// Small abstract instance for property and equilibrium testing: services
/// s1..sl, random coverage with the market assumptions enforced, prices at or
/// above the cheapest offer.
inline MarketInstance gen_random_small(int n_customers, int n_companies, int n_services,
                                       std::uint64_t seed) {
    if (n_services < 2 || n_companies < 2)
        throw std::invalid_argument("gen_random_small: need >= 2 services and companies");
    std::mt19937_64 rng(seed);
    MarketInstance inst;
    for (int i = 0; i < n_services; ++i)
        inst.catalog.services.push_back("s" + std::to_string(i + 1));

    std::uniform_int_distribution<int> ncov(1, n_services - 1);
    std::uniform_int_distribution<int> cost_d(10, 50);
    std::uniform_int_distribution<int> markup(0, 30);

    std::vector<std::size_t> idx(static_cast<std::size_t>(n_services));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    for (int yi = 0; yi < n_companies; ++yi) {
        Company y;
        y.id = "y" + std::to_string(yi + 1);
        int want = ncov(rng);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i = 0; i < want; ++i) y.services.insert(inst.catalog.services[idx[static_cast<std::size_t>(i)]]);
        inst.companies.push_back(std::move(y));
    }
    // Patch uncovered services onto companies that can still take them.
    for (const auto& s : inst.catalog.services) {
        bool covered = false;
        for (const auto& y : inst.companies) covered |= y.services.count(s) > 0;
        if (covered) continue;
        std::uniform_int_distribution<int> pickc(0, n_companies - 1);
        for (int tries = 0; tries < 200; ++tries) {
            Company& y = inst.companies[static_cast<std::size_t>(pickc(rng))];
            if (static_cast<int>(y.services.size()) < n_services - 1) { y.services.insert(s); break; }
        }
    }
    for (auto& y : inst.companies) {
        for (const auto& s : y.services) {
            Money c = Money::from_dollars(cost_d(rng));
            y.costs[s] = c;
            y.offers[s] = c + Money::from_dollars(markup(rng));
        }
        y.ops_cost = Money{0};
    }

    std::uniform_int_distribution<int> nneeds(1, std::min(3, n_services));
    std::uniform_int_distribution<int> premium(0, 100);
    for (int xi = 0; xi < n_customers; ++xi) {
        Customer x;
        x.id = "x" + std::to_string(xi + 1);
        int want = nneeds(rng);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int i = 0; i < want; ++i) {
            const ServiceId& s = inst.catalog.services[idx[static_cast<std::size_t>(i)]];
            Money min_offer{std::numeric_limits<std::int64_t>::max()};
            for (const auto& y : inst.companies) {
                auto it = y.offers.find(s);
                if (it != y.offers.end()) min_offer = std::min(min_offer, it->second);
            }
            x.needs.insert(s);
            x.prices[s] = min_offer + Money::from_dollars(premium(rng));
        }
        inst.customers.push_back(std::move(x));
    }

    inst.penalty_xi = default_penalty(inst.customers);
    inst.lambda = Rat(9, 10);
    inst.discount = NormalizedExpDiscount{0.2};
    return inst;
}

}  // namespace sgm
