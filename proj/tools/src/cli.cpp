#include "bsdr_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"
#include "bsdr/inference.hpp"
#include "bsdr/io.hpp"
#include "bsdr/oracle.hpp"

namespace bsdr::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 0;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::optional<std::uint64_t> oracle_cap;
    std::string experiment;
};

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

io::RunConfig config_or_empty(const Options& o) {
    return o.config.empty() ? io::RunConfig{} : io::load_config(o.config);
}

const GridSpec& need_grid(const io::RunConfig& cfg, const Options& o) {
    if (!cfg.has_grid) throw DomainError("'" + o.config + "' has no 'grid' section");
    return cfg.experiment.spec;
}

Dataset need_dataset(const io::RunConfig& cfg, const Options& o, std::ostream& err) {
    if (!cfg.dataset) throw DomainError("the config has no 'dataset' path");
    std::vector<std::string> warnings;
    Dataset data = io::load_dataset(*cfg.dataset, need_grid(cfg, o), &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    return data;
}

io::OutputDir need_out(const Options& o) {
    if (o.out.empty()) throw DomainError("--out is required");
    return io::OutputDir(o.out);
}

int cmd_simulate(const Options& o, std::ostream&) {
    const auto cfg = io::load_config(o.config);
    const GridSpec& spec = need_grid(cfg, o);
    const std::uint64_t seed = o.seed.value_or(kDefaultSeed);
    JointParams params;
    if (cfg.params) {
        params = *cfg.params;
    } else if (!cfg.experiment.population.groups.empty()) {
        params = draw_population(cfg.experiment.population, seed);
    } else {
        throw DomainError("simulate needs 'params' or 'population'");
    }
    const Dataset data =
        simulate_dataset(spec, params, static_cast<std::size_t>(cfg.experiment.trajectories_per_agent), seed);
    const auto out = need_out(o);
    out.write("dataset.jsonl", io::dataset_to_jsonl(data));
    out.write("simulate.json", dump({{"seed", seed},
                                     {"trajectories_per_agent", cfg.experiment.trajectories_per_agent},
                                     {"params", to_json(params)}}));
    return kExitOk;
}

int cmd_posterior(const Options& o, std::ostream& err) {
    const auto cfg = io::load_config(o.config);
    const Dataset data = need_dataset(cfg, o, err);
    if (cfg.experiment.grid_axes.empty()) throw DomainError("the config has no 'posterior.axes'");
    GridOptions opts = cfg.experiment.grid_options;
    opts.threads = o.threads;
    const PosteriorGrid post = grid_posterior(data, cfg.experiment.grid_axes, cfg.experiment.grid_prior, opts);

    std::ostringstream csv;
    csv << "coordinate,value,probability\r\n";
    auto marginals = nlohmann::json::array();
    for (std::size_t a = 0; a < post.axes().size(); ++a) {
        const auto& axis = post.axes()[a];
        const auto m = post.marginal(a);
        for (std::size_t v = 0; v < m.size(); ++v) {
            csv << csv_field(axis.coord.label()) << ',' << format_number(axis.values[v]) << ','
                << format_number(m[v]) << "\r\n";
        }
        marginals.push_back({{"coordinate", axis.coord.label()}, {"values", axis.values}, {"probability", m}});
    }
    const std::size_t map = post.map_index();
    nlohmann::json j{{"grid_points", post.size()},
                     {"map_index", map},
                     {"map", to_json(post.point(map))},
                     {"log_evidence", post.log_evidence()},
                     {"total_mass", post.total_mass()},
                     {"marginals", marginals}};
    if (cfg.params) {
        j["truth"] = to_json(*cfg.params);
        j["truth_class_mass"] = post.gauge_class_mass(*cfg.params);
        j["map_in_truth_class"] = same_gauge_class(*cfg.params, post.point(map));
    }
    const auto out = need_out(o);
    out.write("posterior_marginals.csv", csv.str());
    out.write("posterior.json", dump(j));
    return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& err) {
    const auto cfg = io::load_config(o.config);
    const Dataset data = need_dataset(cfg, o, err);
    const MleResult r = mle_fit(data, cfg.experiment.fit_prior, cfg.experiment.fit);
    if (!r.diagnostics.converged) {
        err << "warning: fit stopped after " << r.diagnostics.iterations << " iterations with gradient norm "
            << format_number(r.diagnostics.gradient_norm) << "\n";
    }
    need_out(o).write("fit.json", dump({{"params", to_json(r.params)}, {"diagnostics", to_json(r.diagnostics)}}));
    return kExitOk;
}

int cmd_fit_appendix(const Options& o, std::ostream& err) {
    const auto cfg = io::load_config(o.config);
    const Dataset data = need_dataset(cfg, o, err);
    const AppendixResult r = appendix_heuristic_fit(data, cfg.appendix);
    nlohmann::json j = to_json(r);
    j["method"] = "closed-form heuristic without the partition function; not a likelihood maximizer";
    need_out(o).write("fit_appendix.json", dump(j));
    return kExitOk;
}

int cmd_goal_infer(const Options& o, std::ostream& err) {
    const auto cfg = io::load_config(o.config);
    const Dataset data = need_dataset(cfg, o, err);
    if (!cfg.params) throw DomainError("goal-infer needs 'params' with theta_b for every agent");
    const ExperimentConfig& ex = cfg.experiment;
    const std::vector<Cell> candidates = ex.goal_candidates.empty() ? ex.spec.goals() : ex.goal_candidates;
    if (candidates.empty()) throw DomainError("goal-infer needs goal candidates");
    std::vector<GridSpec> specs;
    for (Cell g : candidates) specs.push_back(ex.spec.with_goals({g}));

    std::ostringstream csv;
    csv << "agent_id,trajectory,fraction,prefix_transitions,goal_x,goal_y,probability\r\n";
    auto records = nlohmann::json::array();
    for (const auto& [id, trajs] : data.by_agent) {
        const auto it = cfg.params->theta_b.find(id);
        if (it == cfg.params->theta_b.end()) throw DomainError("no theta_b for agent '" + id + "'");
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            for (double f : ex.prefix_fractions) {
                const auto len = static_cast<std::size_t>(std::floor(f * ex.spec.horizon() + 1e-9));
                const std::span<const Cell> prefix(trajs[i].states.data(), len + 1);
                const auto post = goal_posterior(prefix, specs, it->second, cfg.params->theta_r, ex.goal_prior);
                for (std::size_t g = 0; g < post.size(); ++g) {
                    csv << csv_field(id) << ',' << i << ',' << format_number(f) << ',' << len << ','
                        << candidates[g].x << ',' << candidates[g].y << ',' << format_number(post[g]) << "\r\n";
                }
                records.push_back(
                    {{"agent_id", id}, {"trajectory", i}, {"fraction", f}, {"prefix_transitions", len}, {"posterior", post}});
            }
        }
    }
    auto goals = nlohmann::json::array();
    for (Cell c : candidates) goals.push_back({c.x, c.y});
    const auto out = need_out(o);
    out.write("goal_inference.csv", csv.str());
    out.write("goal_inference.json", dump({{"goal_candidates", goals}, {"records", records}}));
    return kExitOk;
}

int cmd_experiment(const Options& o, std::ostream& err) {
    auto cfg = io::load_config(o.config);
    need_grid(cfg, o);
    ExperimentConfig& ex = cfg.experiment;
    ex.threads = o.threads;
    if (o.seed) ex.seeds = {*o.seed};
    const Report report = run_experiment(o.experiment, ex);
    const auto out = need_out(o);
    out.write(o.experiment + ".json", dump(report.to_json()));
    out.write(o.experiment + ".csv", report.to_csv());
    err << o.experiment << ": " << report.rows.size() << " rows in " << format_number(report.wall_clock_seconds)
        << " s\n";
    return kExitOk;
}

int cmd_oracle_check(const Options& o, std::ostream& err) {
    auto cfg = config_or_empty(o);
    OracleSuiteConfig suite = cfg.oracle;
    if (o.seed) suite.seed = *o.seed;
    if (o.oracle_cap) suite.cap = *o.oracle_cap;
    const auto cases = run_oracle_suite(suite);
    std::size_t failed = 0;
    auto records = nlohmann::json::array();
    for (const auto& c : cases) {
        records.push_back(to_json(c));
        if (!c.passed) {
            ++failed;
            err << "mismatch: " << c.description << " log Z (dp) " << format_number(c.log_z_dp)
                << " vs (enumeration) " << format_number(c.log_z_enumeration) << ", normalization error "
                << format_number(c.normalization_error) << ", prefix error " << format_number(c.prefix_error)
                << "\n";
        }
    }
    err << "oracle-check: " << cases.size() - failed << "/" << cases.size() << " specs agree\n";
    if (!o.out.empty()) {
        io::OutputDir(o.out).write("oracle_check.json", dump({{"seed", suite.seed}, {"cases", records}}));
    }
    return failed == 0 ? kExitOk : kExitDomain;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& err) {
    CLI::App app{"Boltzmann state-dependent rationality: simulation, inference and experiments", "bsdr"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", o.config, "Configuration file (YAML)");
        if (config_required) c->required();
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--seed", o.seed, "Random seed (default 0)");
        sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto* simulate = app.add_subcommand("simulate", "Sample trajectories from configured parameters");
    common(simulate, true);
    auto* posterior = app.add_subcommand("posterior", "Grid posterior over parameters for a dataset");
    common(posterior, true);
    auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit of shared reward and per-agent rationality");
    common(fit, true);
    auto* fit_appendix = app.add_subcommand("fit-appendix", "Closed-form heuristic fit without the partition function");
    common(fit_appendix, true);
    auto* goal_infer = app.add_subcommand("goal-infer", "Goal posteriors for trajectory prefixes");
    common(goal_infer, true);
    auto* experiment = app.add_subcommand("experiment", "Run an experiment harness");
    common(experiment, true);
    experiment->add_option("name", o.experiment, "Experiment name")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    auto* oracle = app.add_subcommand("oracle-check", "Compare the dynamic program with brute-force enumeration");
    common(oracle, false);
    oracle->add_option("--oracle-cap", o.oracle_cap, "Largest number of enumerated trajectories per spec");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            app.exit(e, err, err);
            return kExitOk;
        }
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(o, err);
        if (posterior->parsed()) return cmd_posterior(o, err);
        if (fit->parsed()) return cmd_fit(o, err);
        if (fit_appendix->parsed()) return cmd_fit_appendix(o, err);
        if (goal_infer->parsed()) return cmd_goal_infer(o, err);
        if (experiment->parsed()) return cmd_experiment(o, err);
        if (oracle->parsed()) return cmd_oracle_check(o, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace bsdr::cli
