// Command-line front end: instance generation, baseline/sweep experiments,
// small-instance equilibrium analysis, and property verification.

#include "sgm/datagen.hpp"
#include "sgm/equilibrium.hpp"
#include "sgm/report.hpp"
#include "sgm/serialize.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace sgm;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string config;
    int threads = 1;
    std::string offer_mode = "det";
    std::string semantics = "permissive";
    std::string out = ".";
};

OfferModel make_offer_model(const GlobalOpts& g) {
    OfferModel m;
    m.mode = g.offer_mode == "mc" ? OfferModel::Mode::uniform_iid
                                  : OfferModel::Mode::deterministic_min;
    m.seed = g.seed;
    return m;
}

DeviationSemantics make_semantics(const GlobalOpts& g) {
    return g.semantics == "strict" ? DeviationSemantics::strict : DeviationSemantics::permissive;
}

fs::path out_dir(const GlobalOpts& g) {
    const char* env = std::getenv("SGM_OUT");
    fs::path dir = env && *env ? fs::path(env) : fs::path(g.out);
    fs::create_directories(dir);
    return dir;
}

void apply_config(const GlobalOpts& g, ScenarioConfig& cfg) {
    if (g.config.empty()) return;
    std::ifstream in(g.config);
    if (!in) throw std::invalid_argument("cannot read config " + g.config);
    Json j;
    in >> j;
    cfg.n_customers = j.value("n_customers", cfg.n_customers);
    cfg.n_companies = j.value("n_companies", cfg.n_companies);
    if (j.contains("needs_range"))
        cfg.needs_range = {j["needs_range"][0].get<int>(), j["needs_range"][1].get<int>()};
    if (j.contains("services_range"))
        cfg.services_range = {j["services_range"][0].get<int>(), j["services_range"][1].get<int>()};
    cfg.threshold_lo = j.value("threshold_lo", cfg.threshold_lo);
    cfg.threshold_hi = j.value("threshold_hi", cfg.threshold_hi);
    cfg.threshold_steps = j.value("threshold_steps", cfg.threshold_steps);
    cfg.replicas = j.value("replicas", cfg.replicas);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.discount_variant = j.value("discount_variant", cfg.discount_variant);
    if (j.contains("n_tasks_options"))
        cfg.n_tasks_options = j["n_tasks_options"].get<std::vector<int>>();
}

std::vector<Task> build_tasks(const MarketInstance& inst, std::size_t n_tasks,
                              std::uint64_t seed) {
    if (n_tasks == 0 || n_tasks >= inst.customers.size()) {
        std::vector<std::set<CustomerId>> blocks;
        for (const auto& x : inst.customers) blocks.push_back({x.id});
        return tasks_from_profile(profile_from_blocks(blocks), inst);
    }
    return tasks_from_profile(cluster_tasks(inst.customers, n_tasks, seed), inst);
}

Json baseline_json(const BaselineMetrics& b) {
    Json j;
    j["failure_fraction"] = to_double(b.failure_fraction);
    j["avg_revenue"] = to_double(b.avg_revenue);
    j["avg_payment"] = to_double(b.avg_payment);
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"two-sided market simulation: task allocation and equilibria"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "RNG seed");
    app.add_option("--config", g.config, "JSON config overriding scenario parameters");
    app.add_option("--threads", g.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--offer-mode", g.offer_mode, "offer pricing: det | mc")
        ->check(CLI::IsMember({"det", "mc"}));
    app.add_option("--semantics", g.semantics, "deviation semantics: strict | permissive")
        ->check(CLI::IsMember({"strict", "permissive"}));
    app.add_option("--out", g.out, "output directory (env SGM_OUT overrides)");

    // --- gen ---
    auto* gen = app.add_subcommand("gen", "generate an instance from a scenario preset");
    int scenario = 1;
    std::string cities_path = "data/cities.csv";
    int gen_customers_n = 0, gen_companies_n = 0;
    gen->add_option("--scenario", scenario, "scenario preset 1-5")->check(CLI::Range(1, 5));
    gen->add_option("--cities", cities_path, "city CSV path");
    gen->add_option("--customers", gen_customers_n, "override customer count");
    gen->add_option("--companies", gen_companies_n, "override company count");

    // --- baseline ---
    auto* baseline = app.add_subcommand("baseline", "company-led baseline metrics");
    std::string instance_path;
    baseline->add_option("--instance", instance_path, "instance file")->required();

    // --- sweep / report ---
    auto add_sweep_opts = [&](CLI::App* cmd, SweepConfig& sc) {
        cmd->add_option("--instance", instance_path, "instance file")->required();
        cmd->add_option("--steps", sc.steps, "threshold grid points");
        cmd->add_option("--lo", sc.threshold_lo, "threshold lower bound");
        cmd->add_option("--hi", sc.threshold_hi, "threshold upper bound");
        cmd->add_option("--n-tasks", sc.n_tasks, "number of clustered tasks");
        cmd->add_option("--replicas", sc.replicas, "replicas per threshold");
    };
    SweepConfig sweep_cfg;
    auto* sweep = app.add_subcommand("sweep", "similarity-threshold sweep with NE detection");
    add_sweep_opts(sweep, sweep_cfg);
    auto* report = app.add_subcommand("report", "sweep plus CSV/SVG/summary artifacts");
    add_sweep_opts(report, sweep_cfg);

    // --- equilibrium ---
    auto* eq = app.add_subcommand("equilibrium", "small-instance equilibrium analysis");
    std::string eq_mode = "brute-force";
    std::size_t eq_tasks = 0;
    double eq_threshold = 0.3;
    eq->add_option("--instance", instance_path, "instance file")->required();
    eq->add_option("--mode", eq_mode, "brute-force | dynamics | stackelberg")
        ->check(CLI::IsMember({"brute-force", "dynamics", "stackelberg"}));
    eq->add_flag_callback("--brute-force", [&] { eq_mode = "brute-force"; });
    eq->add_flag_callback("--dynamics", [&] { eq_mode = "dynamics"; });
    eq->add_flag_callback("--stackelberg", [&] { eq_mode = "stackelberg"; });
    eq->add_option("--n-tasks", eq_tasks, "cluster customers into this many tasks (0 = singletons)");
    eq->add_option("--threshold", eq_threshold, "greedy start threshold for dynamics");

    // --- verify ---
    auto* verify = app.add_subcommand("verify", "propositions + potential sign consistency");
    std::size_t verify_tasks = 0;
    verify->add_option("--instance", instance_path, "instance file")->required();
    verify->add_option("--n-tasks", verify_tasks, "cluster customers into this many tasks");

    CLI11_PARSE(app, argc, argv);

    OfferModel offer = make_offer_model(g);
    DeviationSemantics sem = make_semantics(g);

    if (gen->parsed()) {
        ScenarioConfig cfg = scenario_preset(scenario);
        apply_config(g, cfg);
        if (gen_customers_n > 0) cfg.n_customers = gen_customers_n;
        if (gen_companies_n > 0) cfg.n_companies = gen_companies_n;
        cfg.seed = g.seed;
        auto cities = load_cities(cities_path);
        auto inst = gen_instance(cfg, cities, g.seed);
        auto errs = validate_instance(inst);
        if (!errs.empty()) {
            for (const auto& e : errs)
                std::cerr << "invalid instance: " << e.invariant << " (" << e.witness << ")\n";
            return 1;
        }
        fs::path path = out_dir(g) / "instance.json";
        save_instance(inst, path.string());
        std::cout << path.string() << '\n';
        return 0;
    }

    auto inst = load_instance(instance_path);
    auto errs = validate_instance(inst);
    if (!errs.empty()) {
        for (const auto& e : errs)
            std::cerr << "invalid instance: " << e.invariant << " (" << e.witness << ")\n";
        return 1;
    }

    if (baseline->parsed()) {
        std::cout << baseline_json(run_company_led_baseline(inst, offer)).dump(2) << '\n';
        return 0;
    }

    if (sweep->parsed() || report->parsed()) {
        sweep_cfg.seed = g.seed;
        sweep_cfg.threads = g.threads;
        sweep_cfg.offer = offer;
        sweep_cfg.semantics = sem;
        auto rep = run_sweep(inst, sweep_cfg);
        fs::path dir = out_dir(g);
        emit_csv(rep, (dir / "sweep.csv").string());
        Json summary;
        summary["baseline"] = baseline_json(rep.baseline);
        summary["ne_threshold"] =
            rep.ne_threshold ? Json(*rep.ne_threshold) : Json(nullptr);
        summary["prf"] = rep.prf;
        if (report->parsed()) {
            emit_svg(rep, (dir / "sweep.svg").string());
            std::ofstream((dir / "summary.json").string()) << summary.dump(2) << '\n';
        }
        std::cout << summary.dump(2) << '\n';
        return 0;
    }

    if (eq->parsed()) {
        auto tasks = build_tasks(inst, eq_tasks, g.seed);
        Json out;
        if (eq_mode == "brute-force") {
            Json nes = Json::array();
            for (const auto& e : brute_force_follower_ne(tasks, inst, offer, sem)) {
                if (!e.is_ne) continue;
                Json ne;
                ne["partition"] = partition_key(e.blocks);
                ne["phi"] = to_json(e.phi);
                nes.push_back(ne);
            }
            out["equilibria"] = nes;
        } else if (eq_mode == "dynamics") {
            auto start = profile_from_formation_blocks(
                formation_blocks(greedy_team_formation(inst, eq_threshold, g.seed)));
            auto rep = best_response_dynamics(start, tasks, inst, offer, sem);
            out = equilibrium_report_json(rep, inst);
        } else {
            auto res = solve_stackelberg_small(inst, offer, sem);
            out["found"] = res.found;
            if (res.found) {
                out["leader_partition"] = [&] {
                    PartitionBlocks b;
                    std::map<std::string, std::set<std::string>> uniq;
                    for (const auto& [x, s] : res.spl.choice) uniq[partition_key({s})] = s;
                    for (auto& [_, s] : uniq) b.push_back(s);
                    return partition_key(b);
                }();
                out["follower_partition"] =
                    partition_key(formation_blocks(teams_from_profile(res.spf, inst)));
                out["leader_cost"] = to_string(res.leader_cost);
                out["min_cost"] = to_string(res.min_cost);
                out["cost_min_is_se"] = res.cost_min_is_se;
                Json us = Json::object();
                for (const auto& [x, u] : res.utilities) us[x] = to_string(u);
                out["utilities"] = us;
            }
        }
        std::cout << out.dump(2) << '\n';
        return 0;
    }

    if (verify->parsed()) {
        auto tasks = build_tasks(inst, verify_tasks, g.seed);
        Json out;

        auto f = teams_from_profile(follower_br(tasks, inst, offer, sem, g.seed), inst);
        auto spf = profile_from_formation_blocks(formation_blocks(f));
        auto alloc = allocate(tasks, f, inst);

        Json p1 = Json::array();
        for (const auto& v : check_prop1(spf, tasks, f, inst)) {
            p1.push_back(v.detail);
        }
        out["prop1_violations"] = p1;

        Json p2 = Json::array();
        for (const auto& v : check_prop2(alloc, tasks, inst)) {
            p2.push_back(v.detail);
        }
        out["prop2_violations"] = p2;

        if (inst.companies.size() <= 8 && inst.customers.size() <= 8) {
            std::vector<std::set<CustomerId>> blocks;
            for (const auto& x : inst.customers) blocks.push_back({x.id});
            auto p3 = check_prop3(profile_from_blocks(blocks), inst, offer, sem);
            Json ws = Json::array();
            for (const auto& w : p3.welfare_values) ws.push_back(to_json(w));
            out["prop3"] = Json{{"welfare_values", ws}, {"equal", p3.equal}};
        }

        std::vector<std::pair<const MarketInstance*, std::vector<Task>>> cases = {{&inst, tasks}};
        out["sign_consistency"] = to_json(potential_sign_consistency(cases, offer, sem, g.seed));
        std::cout << out.dump(2) << '\n';
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
