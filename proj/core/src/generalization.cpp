#include <chrono>
#include <cmath>

#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"
#include "bsdr/parallel.hpp"

namespace bsdr {

namespace {

// NaN when either side has zero variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    if (a.size() < 2) return std::nan("");
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nan("");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

Report run_generalization(const ExperimentConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    validate(cfg);
    if (cfg.roster.empty()) throw DomainError("generalization needs at least one roster model");

    Report report;
    report.name = "generalization";
    report.config_fingerprint = config_fingerprint(cfg);
    report.metrics = {"policy_true_cost", "reward_correlation", "gradient_norm", "converged"};

    struct SeedResult {
        std::vector<ReportRow> rows;
        nlohmann::json fits = nlohmann::json::object();
        bool single_agent = false;
    };
    std::vector<SeedResult> per_seed(cfg.seeds.size());

    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t k) {
        const std::uint64_t seed = cfg.seeds[k];
        SeedResult& out = per_seed[k];
        const JointParams truth = draw_population(cfg.population, seed);
        const Dataset data =
            simulate_dataset(cfg.spec, truth, static_cast<std::size_t>(cfg.trajectories_per_agent), seed);
        const Split split = split_dataset(data, seed, cfg.train_fraction);
        out.single_agent = split.train.num_agents() == 1;

        // Trajectories on which fitted and true costs are compared.
        std::vector<const Trajectory*> compare;
        const Dataset& pool = split.held_out.num_trajectories() > 0 ? split.held_out : split.train;
        for (const auto& [_, trajs] : pool.by_agent) {
            for (const auto& xi : trajs) compare.push_back(&xi);
        }
        std::vector<double> true_costs;
        for (const Trajectory* xi : compare) true_costs.push_back(trajectory_cost(*xi, truth.theta_r, cfg.spec));

        const Trajectory best = rollout(optimal_policy(cfg.spec, truth.theta_r), cfg.spec);
        out.rows.push_back({seed, "true", {trajectory_cost(best, truth.theta_r, cfg.spec), 1.0, 0.0, 1.0}});

        for (const auto& name : cfg.roster) {
            const FittedModel fitted = fit_model(name, split.train, cfg.fit_prior, cfg.fit);
            const Trajectory path = rollout(optimal_policy(cfg.spec, fitted.params.theta_r), cfg.spec);
            std::vector<double> fitted_costs;
            for (const Trajectory* xi : compare) {
                fitted_costs.push_back(trajectory_cost(*xi, fitted.params.theta_r, cfg.spec));
            }
            out.rows.push_back({seed,
                                name,
                                {trajectory_cost(path, truth.theta_r, cfg.spec), pearson(fitted_costs, true_costs),
                                 fitted.diagnostics.gradient_norm, fitted.diagnostics.converged ? 1.0 : 0.0}});
            out.fits[name] = {{"params", to_json(fitted.params)},
                              {"iterations", fitted.diagnostics.iterations},
                              {"converged", fitted.diagnostics.converged},
                              {"stop_reason", fitted.diagnostics.stop_reason}};
        }
    });

    bool degenerate = false;
    report.details["fits"] = nlohmann::json::object();
    for (std::size_t k = 0; k < per_seed.size(); ++k) {
        for (auto& row : per_seed[k].rows) report.rows.push_back(std::move(row));
        report.details["fits"][std::to_string(cfg.seeds[k])] = std::move(per_seed[k].fits);
        degenerate = degenerate || per_seed[k].single_agent;
    }
    // With one agent theta_b and theta_r trade off freely along the gauge
    // direction, so the fitted theta_r scale carries no information.
    report.details["gauge_degenerate"] = degenerate;
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace bsdr
