#pragma once

#include "sgm/allocation.hpp"
#include "sgm/equilibrium.hpp"
#include "sgm/leader.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sgm {

struct BaselineMetrics {
    Rat failure_fraction;
    Rat avg_revenue;  // over all companies
    Rat avg_payment;  // over served customers only
};

struct SweepRow {
    double threshold = 0.0;
    Rat failure_fraction;
    Rat avg_revenue;
    Rat avg_payment;
    bool is_ne = false;  // every replica's formation passed the NE check
    Rat phi;
    double stddev_failure = 0.0;
    double stddev_revenue = 0.0;
    double stddev_payment = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    std::optional<double> ne_threshold;
    BaselineMetrics baseline;
    std::map<std::string, double> prf;  // % change vs baseline at ne_threshold
    int replicas = 0;
    // Per-replica failure series (replica -> one value per threshold), kept so
    // plots can show the spread behind the averaged line.
    std::vector<std::vector<double>> replica_failure;
};

struct SweepConfig {
    double threshold_lo = 0.0;
    double threshold_hi = 0.6;
    int steps = 300;  // number of threshold grid points, endpoints included
    std::size_t n_tasks = 20;
    int replicas = 10;
    std::uint64_t seed = 0;
    int threads = 1;
    OfferModel offer;  // deterministic_min by default
    DeviationSemantics semantics = DeviationSemantics::permissive;
    AllocationOptions alloc;
};

namespace detail {

struct CellMetrics {
    Rat failure_fraction;
    Rat avg_revenue;
    Rat avg_payment;
    Rat phi;
    bool is_ne = false;
};

inline CellMetrics evaluate_formation(const std::vector<Task>& tasks, const TeamFormation& f,
                                      const MarketInstance& inst, const OfferModel& model,
                                      DeviationSemantics semantics, const AllocationOptions& opts,
                                      bool check_ne) {
    CellMetrics m;
    auto table = TeamOfferTable::build(f, inst);
    auto alloc = allocate(tasks, f, inst, opts);

    long long total_customers = static_cast<long long>(inst.customers.size());
    m.failure_fraction = total_customers == 0 ? Rat(0) : Rat(alloc.failed_customers, total_customers);

    Rat revenue_sum(0);
    for (const auto& y : inst.companies)
        revenue_sum += company_revenue_in_formation(y.id, f, table, tasks, inst, model);
    m.avg_revenue = inst.companies.empty()
                        ? Rat(0)
                        : revenue_sum / Rat(static_cast<long long>(inst.companies.size()));

    Money payment_sum{};
    long long served = 0;
    for (std::size_t ki = 0; ki < tasks.size(); ++ki) {
        if (!alloc.assignment[ki]) continue;
        for (const auto& x : tasks[ki].members) {
            payment_sum += member_payment(x, tasks[ki], inst);
            ++served;
        }
    }
    m.avg_payment = served == 0 ? Rat(0) : rat(payment_sum) / Rat(served);
    m.phi = potential_of_formation(f, table, tasks, inst, model);
    if (check_ne) {
        auto spf = profile_from_formation_blocks(formation_blocks(f));
        m.is_ne = verify_follower_ne(spf, tasks, inst, model, semantics).is_ne;
    }
    return m;
}

inline double stddev_of(const std::vector<Rat>& vals, const Rat& mean) {
    if (vals.size() < 2) return 0.0;
    Rat acc(0);
    for (const auto& v : vals) acc += (v - mean) * (v - mean);
    return std::sqrt(to_double(acc / Rat(static_cast<long long>(vals.size() - 1))));
}

}  // namespace detail

inline BaselineMetrics run_company_led_baseline(const MarketInstance& inst,
                                                const OfferModel& model = {},
                                                const AllocationOptions& opts = {}) {
    std::vector<std::set<CustomerId>> task_blocks;
    for (const auto& x : inst.customers) task_blocks.push_back({x.id});
    auto tasks = tasks_from_profile(profile_from_blocks(task_blocks), inst);

    std::vector<std::set<CompanyId>> team_blocks;
    for (const auto& y : inst.companies) team_blocks.push_back({y.id});
    auto f = formation_from_blocks(team_blocks, inst);

    auto m = detail::evaluate_formation(tasks, f, inst, model,
                                        DeviationSemantics::permissive, opts,
                                        /*check_ne=*/false);
    return {m.failure_fraction, m.avg_revenue, m.avg_payment};
}

inline SweepReport run_sweep(const MarketInstance& inst, const SweepConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("run_sweep: steps must be >= 1");
    if (cfg.replicas < 1) throw std::invalid_argument("run_sweep: replicas must be >= 1");

    std::vector<double> thresholds(cfg.steps);
    for (int i = 0; i < cfg.steps; ++i)
        thresholds[i] = cfg.steps == 1 ? cfg.threshold_lo
                                       : cfg.threshold_lo + (cfg.threshold_hi - cfg.threshold_lo) *
                                                                static_cast<double>(i) /
                                                                static_cast<double>(cfg.steps - 1);

    // Clustering depends on the replica seed only, so do it once per replica.
    std::vector<std::vector<Task>> tasks_by_replica(cfg.replicas);
    for (int r = 0; r < cfg.replicas; ++r) {
        std::size_t k = std::min(cfg.n_tasks, inst.customers.size());
        auto spl = cluster_tasks(inst.customers, k, cfg.seed + static_cast<std::uint64_t>(r));
        tasks_by_replica[r] = tasks_from_profile(spl, inst);
    }

    // One cell per (threshold, replica); cells are independent, results land in
    // preallocated slots so thread count never changes the output.
    std::size_t total = static_cast<std::size_t>(cfg.steps) * cfg.replicas;
    std::vector<detail::CellMetrics> cells(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t idx = next.fetch_add(1);
            if (idx >= total) return;
            int ti = static_cast<int>(idx / cfg.replicas);
            int r = static_cast<int>(idx % cfg.replicas);
            std::uint64_t fseed = detail::mix64(cfg.seed ^ detail::mix64(
                                      static_cast<std::uint64_t>(r) * 2654435761ull +
                                      static_cast<std::uint64_t>(ti) + 1));
            auto f = greedy_team_formation(inst, thresholds[ti], fseed);
            cells[idx] = detail::evaluate_formation(tasks_by_replica[r], f, inst, cfg.offer,
                                                    cfg.semantics, cfg.alloc, /*check_ne=*/true);
        }
    };
    int n_threads = std::max(1, cfg.threads);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepReport rep;
    rep.replicas = cfg.replicas;
    rep.baseline = run_company_led_baseline(inst, cfg.offer, cfg.alloc);
    rep.replica_failure.assign(cfg.replicas, std::vector<double>(cfg.steps, 0.0));

    Rat n_rep(cfg.replicas);
    for (int ti = 0; ti < cfg.steps; ++ti) {
        SweepRow row;
        row.threshold = thresholds[ti];
        std::vector<Rat> fails, revs, pays;
        row.is_ne = true;
        Rat phi_sum(0);
        for (int r = 0; r < cfg.replicas; ++r) {
            const auto& c = cells[static_cast<std::size_t>(ti) * cfg.replicas + r];
            fails.push_back(c.failure_fraction);
            revs.push_back(c.avg_revenue);
            pays.push_back(c.avg_payment);
            phi_sum += c.phi;
            row.is_ne = row.is_ne && c.is_ne;
            rep.replica_failure[r][ti] = to_double(c.failure_fraction);
        }
        for (const auto& v : fails) row.failure_fraction += v;
        for (const auto& v : revs) row.avg_revenue += v;
        for (const auto& v : pays) row.avg_payment += v;
        row.failure_fraction /= n_rep;
        row.avg_revenue /= n_rep;
        row.avg_payment /= n_rep;
        row.phi = phi_sum / n_rep;
        row.stddev_failure = detail::stddev_of(fails, row.failure_fraction);
        row.stddev_revenue = detail::stddev_of(revs, row.avg_revenue);
        row.stddev_payment = detail::stddev_of(pays, row.avg_payment);
        rep.rows.push_back(std::move(row));
    }

    for (const auto& row : rep.rows) {
        if (!row.is_ne) continue;
        rep.ne_threshold = row.threshold;
        if (rep.baseline.avg_payment != 0)
            rep.prf["payment"] = to_double((row.avg_payment - rep.baseline.avg_payment) /
                                           rep.baseline.avg_payment) * 100.0;
        if (rep.baseline.avg_revenue != 0)
            rep.prf["revenue"] = to_double((row.avg_revenue - rep.baseline.avg_revenue) /
                                           rep.baseline.avg_revenue) * 100.0;
        break;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline std::string fmt_fixed(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline void emit_csv(const SweepReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "threshold,failure_fraction,avg_revenue,avg_payment,is_ne,phi,"
           "stddev_failure_fraction,stddev_avg_revenue,stddev_avg_payment\n";
    for (const auto& r : rep.rows) {
        out << fmt_fixed(r.threshold) << ',' << fmt_fixed(to_double(r.failure_fraction)) << ','
            << fmt_fixed(to_double(r.avg_revenue)) << ',' << fmt_fixed(to_double(r.avg_payment))
            << ',' << (r.is_ne ? 1 : 0) << ',' << fmt_fixed(to_double(r.phi)) << ','
            << fmt_fixed(r.stddev_failure) << ',' << fmt_fixed(r.stddev_revenue) << ','
            << fmt_fixed(r.stddev_payment) << '\n';
    }
}

namespace detail {

struct ChartScale {
    double x_lo, x_span, y_lo, y_span;
    double x0, y0, w, h;  // pixel frame (y grows downward in SVG)
    double px(double x) const { return x0 + (x - x_lo) / (x_span == 0 ? 1 : x_span) * w; }
    double py(double y) const { return y0 + h - (y - y_lo) / (y_span == 0 ? 1 : y_span) * h; }
};

inline void svg_polyline(std::ostream& out, const ChartScale& sc, const std::vector<double>& xs,
                         const std::vector<double>& ys, const std::string& style) {
    out << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ' ';
        out << fmt_fixed(sc.px(xs[i]), 2) << ',' << fmt_fixed(sc.py(ys[i]), 2);
    }
    out << "\"/>\n";
}

inline void svg_hline(std::ostream& out, const ChartScale& sc, double y, const std::string& style) {
    double yy = sc.py(std::min(std::max(y, sc.y_lo), sc.y_lo + sc.y_span));
    out << "<line " << style << " x1=\"" << fmt_fixed(sc.x0, 2) << "\" y1=\"" << fmt_fixed(yy, 2)
        << "\" x2=\"" << fmt_fixed(sc.x0 + sc.w, 2) << "\" y2=\"" << fmt_fixed(yy, 2) << "\"/>\n";
}

}  // namespace detail

/// Two line charts (failure vs threshold, revenue vs threshold) with the
/// company-led baseline as a horizontal reference. The failure chart shows the
/// per-replica series behind the averaged line, so the file holds exactly
/// 2 + replicas polylines.
inline void emit_svg(const SweepReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"400\" "
           "viewBox=\"0 0 900 400\">\n";
    out << "<rect width=\"900\" height=\"400\" fill=\"white\"/>\n";

    std::vector<double> xs, fail, revs;
    for (const auto& r : rep.rows) {
        xs.push_back(r.threshold);
        fail.push_back(to_double(r.failure_fraction));
        revs.push_back(to_double(r.avg_revenue));
    }
    auto span = [](std::vector<double> v, double extra) {
        if (v.empty()) return std::pair<double, double>{0.0, 1.0};
        v.push_back(extra);
        auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        double s = *hi - *lo;
        return std::pair<double, double>{*lo, s == 0 ? 1.0 : s};
    };
    double x_lo = xs.empty() ? 0.0 : xs.front();
    double x_span = xs.empty() ? 1.0 : std::max(xs.back() - xs.front(), 1e-12);

    double bfail = to_double(rep.baseline.failure_fraction);
    double brev = to_double(rep.baseline.avg_revenue);
    auto [f_lo, f_span] = span(fail, bfail);
    auto [r_lo, r_span] = span(revs, brev);
    detail::ChartScale left{x_lo, x_span, f_lo, f_span, 60, 30, 340, 320};
    detail::ChartScale right{x_lo, x_span, r_lo, r_span, 500, 30, 340, 320};

    for (const auto* sc : {&left, &right})
        out << "<rect x=\"" << sc->x0 << "\" y=\"" << sc->y0 << "\" width=\"" << sc->w
            << "\" height=\"" << sc->h << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"230\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">failure fraction vs "
           "threshold</text>\n";
    out << "<text x=\"670\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">avg revenue vs "
           "threshold</text>\n";

    if (!xs.empty()) {
        for (const auto& series : rep.replica_failure)
            detail::svg_polyline(out, left, xs, series,
                                 "stroke=\"#9ecae1\" stroke-width=\"1\"");
        detail::svg_polyline(out, left, xs, fail, "stroke=\"#08519c\" stroke-width=\"2\"");
        detail::svg_polyline(out, right, xs, revs, "stroke=\"#a63603\" stroke-width=\"2\"");
    }
    detail::svg_hline(out, left, bfail, "stroke=\"#666\" stroke-dasharray=\"6,4\"");
    detail::svg_hline(out, right, brev, "stroke=\"#666\" stroke-dasharray=\"6,4\"");
    out << "</svg>\n";
}

/// Spearman rank correlation with average ranks on ties.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("spearman: need two equal-length series");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    auto rx = ranks(xs), ry = ranks(ys);
    double n = static_cast<double>(xs.size());
    double mx = (n + 1) / 2.0, my = mx;
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0 || dy == 0) return 0.0;
    return num / std::sqrt(dx * dy);
}

}  // namespace sgm
