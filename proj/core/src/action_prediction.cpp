#include <chrono>
#include <cmath>

#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"
#include "bsdr/parallel.hpp"

namespace bsdr {

namespace {

struct Score {
    double nll = 0.0;
    std::size_t steps = 0;
    double max_deviation = 0.0;
};

void score_agent(const BsdrParams& p, const GridSpec& spec, const std::vector<Trajectory>& trajs, Score& score) {
    const SoftBackup backup = log_partition(p, spec);
    for (const auto& xi : trajs) {
        double sum = 0.0;
        for (std::size_t t = 0; t + 1 < xi.states.size(); ++t) {
            sum += backup.log_action_prob(static_cast<int>(t), spec.index(xi.states[t]), spec.index(xi.states[t + 1]));
        }
        const double whole = traj_log_prob(xi, p, spec, backup);
        const double dev = std::abs(sum - whole);
        if (!(dev <= 1e-9)) {
            throw ContractViolation("per-step log-probabilities sum to " + format_number(sum) +
                                    " but the trajectory log-probability is " + format_number(whole));
        }
        score.max_deviation = std::max(score.max_deviation, dev);
        score.nll -= sum;
        score.steps += xi.states.size() - 1;
    }
}

}  // namespace

Report run_action_prediction(const ExperimentConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    validate(cfg);

    Report report;
    report.name = "action_prediction";
    report.config_fingerprint = config_fingerprint(cfg);
    report.metrics = {"cross_entropy", "steps", "chain_rule_max_deviation"};

    std::vector<std::vector<ReportRow>> per_seed(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t k) {
        const std::uint64_t seed = cfg.seeds[k];
        const JointParams truth = draw_population(cfg.population, seed);
        const Dataset data =
            simulate_dataset(cfg.spec, truth, static_cast<std::size_t>(cfg.trajectories_per_agent), seed);
        const Split split = split_dataset(data, seed, cfg.train_fraction);
        const Dataset& eval = split.held_out;

        auto emit = [&](const std::string& name, const Score& s) {
            const double ce = s.steps == 0 ? std::nan("") : s.nll / static_cast<double>(s.steps);
            per_seed[k].push_back({seed, name, {ce, static_cast<double>(s.steps), s.max_deviation}});
        };

        for (const auto& name : cfg.roster) {
            const FittedModel fitted = fit_model(name, split.train, cfg.fit_prior, cfg.fit);
            Score s;
            for (const auto& [id, trajs] : eval.by_agent) score_agent(fitted.for_agent(id), cfg.spec, trajs, s);
            emit(name, s);
        }
        Score true_score;
        for (const auto& [id, trajs] : eval.by_agent) {
            score_agent(truth.for_agent(id), cfg.spec, trajs, true_score);
        }
        emit("bsdr_true", true_score);

        // Each of the five actions has probability 1/5 at every step.
        std::size_t steps = 0;
        for (const auto& [_, trajs] : eval.by_agent) {
            for (const auto& xi : trajs) steps += xi.states.size() - 1;
        }
        per_seed[k].push_back(
            {seed, "uniform", {steps == 0 ? std::nan("") : std::log(5.0), static_cast<double>(steps), 0.0}});
    });

    for (auto& rows : per_seed) {
        for (auto& row : rows) report.rows.push_back(std::move(row));
    }
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace bsdr
