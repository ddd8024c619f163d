#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"
#include "bsdr/oracle.hpp"
#include "support/oracle.hpp"

using namespace bsdr;

namespace {

double path_cost(const std::vector<Cell>& states, const Eigen::VectorXd& theta_r, const GridSpec& spec) {
    double c = 0.0;
    for (Cell s : states) c += theta_r.dot(featurize(s, spec));
    return c;
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.spec = GridSpec(4, 4, {}, {0, 3}, {{3, 0}}, 5, FeatureMap::bias_goal_dist);
    cfg.population.theta_r = Eigen::Vector2d(0.0, -2.0);
    cfg.population.groups = {{3, Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(2.0, 1.0)}};
    cfg.trajectories_per_agent = 8;
    cfg.seeds = {0, 1};
    cfg.fit_prior = Prior::gaussian(3.0);
    cfg.fit.max_iterations = 300;
    return cfg;
}

}  // namespace

TEST_CASE("optimal policy matches exhaustive search") {
    Engine engine(41);
    for (int k = 0; k < 15; ++k) {
        const GridSpec spec = random_spec(engine, 3, 3, 4);
        Eigen::VectorXd theta_r(spec.feature_dim());
        for (Eigen::Index i = 0; i < theta_r.size(); ++i) theta_r[i] = uniform(engine, -2.0, 2.0);
        double best = INFINITY;
        for (const auto& path : oracle::all_paths(spec)) best = std::min(best, path_cost(path.states, theta_r, spec));
        const Trajectory xi = rollout(optimal_policy(spec, theta_r), spec);
        CHECK_NOTHROW(validate_trajectory(xi, spec));
        CHECK(trajectory_cost(xi, theta_r, spec) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("goal-seeking policy arrives along a shortest path") {
    const GridSpec spec(5, 5, {{1, 1}, {2, 1}, {3, 1}, {1, 3}}, {0, 4}, {{4, 0}}, 12, FeatureMap::bias_goal_dist);
    const Trajectory xi = rollout(optimal_policy(spec, Eigen::Vector2d(0.0, -1.0)), spec);
    const int d = oracle::bfs_distance(spec, spec.start(), {4, 0});
    REQUIRE(d > 0);
    const auto first = std::find(xi.states.begin(), xi.states.end(), Cell{4, 0});
    REQUIRE(first != xi.states.end());
    CHECK(first - xi.states.begin() == d);
    CHECK(std::all_of(first, xi.states.end(), [](Cell c) { return c == Cell{4, 0}; }));
}

TEST_CASE("zero reward picks the first action everywhere") {
    const GridSpec spec(3, 3, {}, {1, 2}, {{0, 0}}, 4, FeatureMap::bias_goal_dist);
    const PolicyTable policy = optimal_policy(spec, Eigen::Vector2d::Zero());
    CHECK(std::all_of(policy.actions.begin(), policy.actions.end(), [](int a) { return a == 0; }));
    CHECK_THROWS_AS(optimal_policy(spec, Eigen::Vector3d::Zero()), DomainError);
}

TEST_CASE("splits partition indices deterministically") {
    for (std::size_t n : {0u, 1u, 7u, 32u}) {
        const auto [train, held] = split_indices(n, 5, 0.75);
        CHECK(train.size() == static_cast<std::size_t>(std::lround(0.75 * static_cast<double>(n))));
        CHECK(std::is_sorted(train.begin(), train.end()));
        CHECK(std::is_sorted(held.begin(), held.end()));
        std::set<std::size_t> all(train.begin(), train.end());
        all.insert(held.begin(), held.end());
        CHECK(all.size() == n);
        CHECK(train.size() + held.size() == n);
        CHECK(split_indices(n, 5, 0.75) == split_indices(n, 5, 0.75));
    }
    CHECK(split_indices(100, 1, 0.5) != split_indices(100, 2, 0.5));

    const ExperimentConfig cfg = small_config();
    const JointParams truth = draw_population(cfg.population, 3);
    const Dataset data = simulate_dataset(cfg.spec, truth, 8, 3);
    const Split split = split_dataset(data, 3, 0.75);
    CHECK(split.train.num_trajectories() == 18);
    CHECK(split.held_out.num_trajectories() == 6);
}

TEST_CASE("populations and simulation are seeded") {
    const ExperimentConfig cfg = small_config();
    const JointParams a = draw_population(cfg.population, 9);
    const JointParams b = draw_population(cfg.population, 9);
    REQUIRE(a.theta_b.size() == 3);
    CHECK(a.theta_b.count(agent_name(0)) == 1);
    for (const auto& [id, v] : a.theta_b) {
        CHECK(v == b.theta_b.at(id));
        CHECK(v[0] >= 0.5);
        CHECK(v[0] <= 2.0);
    }
    CHECK(simulate_dataset(cfg.spec, a, 4, 1).by_agent == simulate_dataset(cfg.spec, a, 4, 1).by_agent);
    CHECK(agent_name(12) == "agent_012");
}

TEST_CASE("number formatting round-trips and CSV fields follow RFC 4180") {
    Engine engine(43);
    for (int k = 0; k < 1000; ++k) {
        const double v = std::ldexp(uniform(engine, -1.0, 1.0), uniform_int(engine, 200) - 100);
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("reports are reproducible and well formed") {
    ExperimentConfig cfg = small_config();
    const Report a = run_generalization(cfg);
    const Report b = run_generalization(cfg);
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.rows.size() == cfg.seeds.size() * (cfg.roster.size() + 1));
    const std::string csv = a.to_csv();
    CHECK(csv.rfind("seed,condition,policy_true_cost,reward_correlation,gradient_norm,converged\r\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(a.rows.size() + 1));

    cfg.threads = 2;
    CHECK(run_generalization(cfg).to_json().dump() == a.to_json().dump());

    CHECK_THROWS_AS(run_experiment("nope", cfg), DomainError);
    cfg.train_fraction = 0.0;
    CHECK_THROWS_AS(run_generalization(cfg), DomainError);
}

TEST_CASE("action prediction obeys the chain rule") {
    const ExperimentConfig cfg = small_config();
    const Report r = run_action_prediction(cfg);
    for (double d : r.column("bsdr", "chain_rule_max_deviation")) CHECK(d < 1e-9);
    for (double d : r.column("bsdr_true", "chain_rule_max_deviation")) CHECK(d < 1e-9);
    for (double h : r.column("uniform", "cross_entropy")) CHECK(h == std::log(5.0));
    CHECK(r.mean("bsdr_true", "cross_entropy") < r.mean("uniform", "cross_entropy"));
}

TEST_CASE("goal inference on nearly deterministic agents") {
    ExperimentConfig cfg;
    cfg.spec = GridSpec(5, 5, {}, {2, 4}, {{0, 0}}, 8, FeatureMap::bias_goal_dist);
    cfg.population.theta_r = Eigen::Vector2d(0.0, -3.0);
    cfg.population.groups = {{4, Eigen::Vector2d(6.0, 0.0), Eigen::Vector2d(6.0, 0.0)}};
    cfg.trajectories_per_agent = 8;
    cfg.goal_candidates = {{0, 0}, {4, 0}};
    cfg.seeds = {0, 1};
    const Report r = run_goal_inference(cfg);
    CHECK(r.mean("bsdr@1", "true_goal_probability") > 0.95);
    CHECK(r.mean("bsdr@1", "true_goal_probability") > r.mean("bsdr@0.25", "true_goal_probability"));
    CHECK(r.details.at("max_empty_prefix_prior_deviation").get<double>() < 1e-9);

    cfg.goal_candidates = {{0, 0}};
    CHECK_THROWS_AS(run_goal_inference(cfg), DomainError);
}

TEST_CASE("parameter recovery concentrates with more data") {
    ExperimentConfig cfg;
    cfg.spec = GridSpec(5, 5, {}, {0, 4}, {{4, 0}}, 8, FeatureMap::bias_goal_dist);
    cfg.population.theta_r = Eigen::Vector2d(0.0, -1.0);
    cfg.population.groups = {{1, Eigen::Vector2d(1.0, 3.0), Eigen::Vector2d(1.0, 3.0)}};
    cfg.dataset_sizes = {5, 50, 500};
    cfg.seeds = {0, 1, 2, 3};
    const std::string a = agent_name(0);
    cfg.grid_axes = {{{Coordinate::Block::reward, "", 0}, {0.0, 0.5}},
                     {{Coordinate::Block::reward, "", 1}, {-1.0, -0.5}},
                     {{Coordinate::Block::rationality, a, 0}, {0.5, 1.0}},
                     {{Coordinate::Block::rationality, a, 1}, {1.0, 3.0}}};
    const Report r = run_parameter_recovery(cfg);
    const double m5 = r.mean("n=5", "truth_class_mass");
    const double m500 = r.mean("n=500", "truth_class_mass");
    CHECK(m500 > m5);
    CHECK(m500 > 0.9);
    for (double t : r.column("n=50", "total_mass")) CHECK(t == doctest::Approx(1.0));
}
