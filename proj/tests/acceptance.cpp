// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Thresholds are fixed here and never read from configuration.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bsdr/experiments.hpp"
#include "bsdr/inference.hpp"
#include "bsdr/io.hpp"
#include "bsdr/oracle.hpp"
#include "support/oracle.hpp"

using namespace bsdr;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

io::RunConfig config(const std::string& name) {
    return io::load_config(std::string(BSDR_CONFIG_DIR) + "/" + name);
}

std::string describe_spec(const GridSpec& spec) {
    return std::to_string(spec.width()) + "x" + std::to_string(spec.height()) + " T=" + std::to_string(spec.horizon()) +
           " " + std::string(to_string(spec.feature_map()));
}

Outcome partition_oracle() {
    OracleSuiteConfig cfg;
    cfg.num_specs = 25;
    cfg.max_width = 4;
    cfg.max_height = 4;
    cfg.max_horizon = 5;
    cfg.seed = 2024;
    const auto t0 = Clock::now();
    const auto cases = run_oracle_suite(cfg);
    const double elapsed = seconds_since(t0);
    double worst = 0.0;
    for (const auto& c : cases) worst = std::max(worst, std::abs(c.log_z_dp - c.log_z_enumeration));
    return {cases.size() >= 20 && worst < 1e-9 && elapsed < 10.0,
            std::to_string(cases.size()) + " specs, max |dlogZ| " + fmt(worst) + ", " + fmt(elapsed) + " s"};
}

Outcome normalization() {
    Engine engine(2025);
    double traj_err = 0.0;
    double prefix_err = 0.0;
    const int specs = 25;
    for (int k = 0; k < specs; ++k) {
        const GridSpec spec = random_spec(engine, 4, 4, 5);
        const BsdrParams p = random_params(engine, spec);
        const SoftBackup backup = log_partition(p, spec);
        double total = 0.0;
        for (const auto& xi : enumerate_trajectories(spec)) total += std::exp(traj_log_prob(xi, p, spec, backup));
        traj_err = std::max(traj_err, std::abs(total - 1.0));
        for (int len = 1; len <= spec.horizon(); ++len) {
            double mass = 0.0;
            for (const auto& xi : enumerate_trajectories(spec.with_horizon(len))) {
                mass += std::exp(prefix_log_likelihood(xi.states, p, spec, backup));
            }
            prefix_err = std::max(prefix_err, std::abs(mass - 1.0));
        }
    }
    return {traj_err < 1e-9 && prefix_err < 1e-9, std::to_string(specs) + " specs, max trajectory error " +
                                                      fmt(traj_err) + ", max prefix error " + fmt(prefix_err)};
}

Outcome parameter_recovery() {
    io::RunConfig rc = config("parameter_recovery.yaml");
    const ExperimentConfig& cfg = rc.experiment;
    const auto t0 = Clock::now();
    const Report report = run_parameter_recovery(cfg);
    const double elapsed = seconds_since(t0);
    const int n = *std::max_element(cfg.dataset_sizes.begin(), cfg.dataset_sizes.end());
    const std::string cond = "n=" + std::to_string(n);
    const auto map_ok = report.column(cond, "map_is_truth");
    const auto mass = report.column(cond, "truth_class_mass");
    int passing = 0;
    for (std::size_t i = 0; i < map_ok.size(); ++i) passing += (map_ok[i] == 1.0 && mass[i] > 0.9) ? 1 : 0;
    const auto truth = cfg.population.groups.front().theta_b_lo;
    const bool setup = n >= 200 && cfg.spec.feature_map() == FeatureMap::bias_goal_dist &&
                       cfg.population.theta_r == Eigen::Vector2d(0, 1) && truth == Eigen::Vector2d(1, 100) &&
                       map_ok.size() == 20;
    return {setup && passing >= 18 && elapsed < 60.0,
            std::to_string(passing) + "/" + std::to_string(map_ok.size()) + " seeds with MAP = truth and class mass > 0.9 at " +
                cond + ", " + fmt(elapsed) + " s"};
}

Outcome gauge_invariance() {
    Engine engine(2026);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const GridSpec spec = random_spec(engine, 4, 4, 5);
        const BsdrParams p = random_params(engine, spec);
        const double c = std::exp(uniform(engine, -3.0, 3.0));
        const BsdrParams q{p.theta_r / c, c * p.theta_b};
        const Trajectory xi = sample_trajectory(p, spec, log_partition(p, spec), engine());
        const double a = traj_log_prob(xi, p, spec, log_partition(p, spec));
        const double b = traj_log_prob(xi, q, spec, log_partition(q, spec));
        worst = std::max(worst, std::abs(a - b));
    }
    return {worst < 1e-9, "100 triples, max deviation " + fmt(worst)};
}

Outcome br_reduction() {
    Engine engine(2027);
    double worst = 0.0;
    int checked = 0;
    while (checked < 100) {
        const GridSpec spec = random_spec(engine, 4, 4, 5);
        if (!spec.has_bias_feature()) continue;
        const Eigen::VectorXd theta_r = random_params(engine, spec).theta_r;
        const double beta = uniform(engine, 0.0, 3.0);
        const BsdrParams p{theta_r, bias_only(beta, spec.feature_dim())};
        const SoftBackup backup = log_partition(p, spec);
        const Trajectory xi = sample_trajectory(p, spec, backup, engine());
        worst = std::max(worst, std::abs(traj_log_prob(xi, p, spec, backup) - br_traj_log_prob(xi, theta_r, beta, spec)));
        ++checked;
    }
    return {worst < 1e-12, "100 trajectories, max deviation " + fmt(worst)};
}

Outcome gradient() {
    Engine engine(2028);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const GridSpec spec = random_spec(engine, 3, 3, 4);
        JointParams p;
        p.theta_r = random_params(engine, spec).theta_r;
        for (const char* id : {"a", "b"}) p.theta_b[id] = random_params(engine, spec).theta_b;
        const DatasetSummary summary = summarize(simulate_dataset(spec, p, 6, engine()));
        const Prior prior = Prior::gaussian(5.0);

        std::vector<double*> slots{};
        JointParams probe = p;
        for (Eigen::Index i = 0; i < probe.theta_r.size(); ++i) slots.push_back(&probe.theta_r[i]);
        for (auto& [_, b] : probe.theta_b) {
            for (Eigen::Index i = 0; i < b.size(); ++i) slots.push_back(&b[i]);
        }
        const ObjectiveEval eval = mle_objective(summary, spec, p, prior);
        std::vector<double> analytic(eval.gradient.theta_r.data(), eval.gradient.theta_r.data() + eval.gradient.theta_r.size());
        for (const auto& [_, g] : eval.gradient.theta_b) analytic.insert(analytic.end(), g.data(), g.data() + g.size());

        // Five-point stencil: O(h^4) truncation with a wide step keeps the
        // rounding noise near eps * |f| / h.
        const double h = 1e-3;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const double x0 = *slots[i];
            auto f = [&](double x) {
                *slots[i] = x;
                return mle_objective(summary, spec, probe, prior).value;
            };
            const double numeric = (f(x0 - 2 * h) - 8 * f(x0 - h) + 8 * f(x0 + h) - f(x0 + 2 * h)) / (12 * h);
            *slots[i] = x0;
            // Components whose magnitude is below the difference quotient's
            // own rounding floor carry no relative information.
            const double floor = 1e-6;
            const double rel = std::abs(analytic[i] - numeric) / std::max({std::abs(numeric), std::abs(analytic[i]), floor});
            if (std::getenv("BSDR_ACCEPTANCE_VERBOSE") && rel > 1e-5) {
                std::cerr << "  gradient " << k << ":" << i << " analytic " << analytic[i] << " numeric " << numeric
                          << " " << describe_spec(spec) << "\n";
            }
            worst = std::max(worst, rel);
        }
    }
    return {worst < 1e-4, "10 instances, max componentwise relative error " + fmt(worst)};
}

Outcome sampler() {
    const GridSpec spec(3, 3, {}, {0, 0}, {{2, 2}}, 3, FeatureMap::bias_goal_dist);
    // Goal-seeking enough that an exact sampler's expected TV at 1e5 draws
    // (about 0.005) sits clearly below the threshold.
    const BsdrParams p{Eigen::Vector2d(0.0, -3.0), Eigen::Vector2d(2.0, 1.0)};
    const SoftBackup backup = log_partition(p, spec);
    const auto paths = oracle::all_paths(spec);
    const auto probs = oracle::path_probs(p, spec);
    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t i = 0; i < paths.size(); ++i) index[paths[i].actions] = i;
    const std::size_t n = 100000;
    std::vector<double> counts(paths.size(), 0.0);
    for (const auto& xi : sample_trajectories(p, spec, backup, n, 2029)) counts[index.at(xi.actions)] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < paths.size(); ++i) tv += std::abs(counts[i] / static_cast<double>(n) - probs[i]);
    tv *= 0.5;
    // Mean TV of an exact sampler at this n (normal approximation).
    double expected = 0.0;
    for (double q : probs) expected += std::sqrt(2.0 * q * (1.0 - q) / (M_PI * static_cast<double>(n)));
    expected *= 0.5;
    return {tv < 0.01, "TV over " + std::to_string(paths.size()) + " action sequences from 1e5 samples " + fmt(tv) +
                           " (exact-sampler expectation " + fmt(expected) + ")"};
}

Outcome appendix() {
    const GridSpec spec(5, 5, {}, {0, 4}, {{4, 0}}, 6, FeatureMap::bias_goal_dist);
    JointParams truth{Eigen::Vector2d(0.0, -1.0),
                      {{"a", Eigen::Vector2d(1.0, 0.5)}, {"b", Eigen::Vector2d(0.5, 1.5)}, {"c", Eigen::Vector2d(2.0, 0.0)}}};
    const Dataset data = simulate_dataset(spec, truth, 10, 2030);
    const AppendixResult r = appendix_heuristic_fit(data);

    // Closed form recomputed from raw feature counts.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.feature_dim());
    for (const auto& [id, trajs] : data.by_agent) {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(spec.feature_dim(), spec.feature_dim());
        for (const auto& xi : trajs) {
            for (Cell s : xi.states) phi += featurize(s, spec) * featurize(s, spec).transpose();
        }
        v += phi * r.params.theta_b.at(id);
    }
    const double closed = (r.params.theta_r + v / v.norm()).cwiseAbs().maxCoeff();
    double residual = 0.0;
    for (const auto& [_, res] : r.lagrange_residuals) residual = std::max(residual, res);

    Eigen::MatrixXd diag = Eigen::Vector3d(1.0, 4.0, 2.0).asDiagonal();
    AppendixConfig dcfg;
    dcfg.init["a"] = Eigen::Vector3d(1.0, 1.0, 1.0);
    const AppendixResult d = appendix_heuristic_fit({{"a", diag}}, dcfg);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diag.transpose() * diag);
    const double align = 1.0 - std::abs(d.params.theta_b.at("a").dot(eig.eigenvectors().col(2)));

    return {r.converged && closed < 1e-12 && residual < 1e-6 && d.converged && align < 1e-9,
            "closed-form gap " + fmt(closed) + ", max Lagrange residual " + fmt(residual) +
                ", dominant-eigenvector misalignment " + fmt(align)};
}

Outcome goal_inference() {
    io::RunConfig rc = config("goal_inference.yaml");
    const ExperimentConfig& cfg = rc.experiment;
    const Report report = run_goal_inference(cfg);
    const double at25 = report.mean("bsdr@0.25", "true_goal_probability");
    const double at100 = report.mean("bsdr@1", "true_goal_probability");
    const double dev = report.details.at("max_empty_prefix_prior_deviation").get<double>();
    const auto counts = report.column("bsdr@1", "prefixes");
    int agents = 0;
    for (const auto& g : cfg.population.groups) agents += g.count;
    const auto held = split_indices(static_cast<std::size_t>(cfg.trajectories_per_agent), 0, cfg.train_fraction).second;
    const bool setup = agents == 20 && held.size() == 8 && !counts.empty() && counts.front() == 160.0;
    return {setup && at100 > at25 && dev < 1e-9,
            std::to_string(agents) + " agents x " + std::to_string(held.size()) + " held-out trajectories, mean P(true goal) " +
                fmt(at25) + " at 0.25 vs " + fmt(at100) + " at 1.0, k=0 prior deviation " + fmt(dev)};
}

Outcome generalization() {
    io::RunConfig het = config("generalization.yaml");
    const Report r = run_generalization(het.experiment);
    const double bsdr = r.mean("bsdr", "policy_true_cost");
    const double br = r.mean("br_aggregate", "policy_true_cost");

    io::RunConfig eq = config("generalization_equal.yaml");
    const Report e = run_generalization(eq.experiment);
    int equal = 0;
    for (std::uint64_t seed : eq.experiment.seeds) {
        std::vector<double> costs;
        for (const auto& row : e.rows) {
            if (row.seed == seed) costs.push_back(row.values[0]);
        }
        bool same = true;
        for (double c : costs) same = same && std::abs(c - costs.front()) < 1e-9;
        equal += same ? 1 : 0;
    }
    const std::size_t seeds = eq.experiment.seeds.size();
    return {het.experiment.seeds.size() == 20 && bsdr <= br && equal == static_cast<int>(seeds),
            "mean true cost bsdr " + fmt(bsdr) + " vs br_aggregate " + fmt(br) + " over " +
                std::to_string(het.experiment.seeds.size()) + " seeds; equal-beta costs equal on " +
                std::to_string(equal) + "/" + std::to_string(seeds) + " seeds"};
}

Outcome chain_rule() {
    Engine engine(2031);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const GridSpec spec = random_spec(engine, 4, 4, 5);
        const BsdrParams p = random_params(engine, spec);
        const SoftBackup backup = log_partition(p, spec);
        const Trajectory xi = sample_trajectory(p, spec, backup, engine());
        double sum = 0.0;
        for (int t = 0; t < spec.horizon(); ++t) {
            const auto u = static_cast<std::size_t>(t);
            sum += backup.action_log_probs(t, spec.index(xi.states[u]), spec)[static_cast<std::size_t>(xi.actions[u])];
        }
        worst = std::max(worst, std::abs(sum - traj_log_prob(xi, p, spec, backup)));
    }
    io::RunConfig rc = config("action_prediction.yaml");
    const Report r = run_action_prediction(rc.experiment);
    bool uniform_exact = true;
    for (double h : r.column("uniform", "cross_entropy")) uniform_exact = uniform_exact && h == std::log(5.0);
    return {worst < 1e-9 && uniform_exact,
            "100 trajectories, max deviation " + fmt(worst) + "; uniform cross-entropy " +
                (uniform_exact ? "equals" : "differs from") + " log 5"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"partition oracle", partition_oracle},
        {"normalization", normalization},
        {"parameter recovery (bias/closeness world)", parameter_recovery},
        {"gauge invariance", gauge_invariance},
        {"Boltzmann-rational reduction", br_reduction},
        {"gradient correctness", gradient},
        {"sampler exactness", sampler},
        {"Z-free heuristic fidelity", appendix},
        {"goal inference", goal_inference},
        {"reward generalization", generalization},
        {"chain rule", chain_rule},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        failed += out.pass ? 0 : 1;
        std::cout << (out.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << out.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
