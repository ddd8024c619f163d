#include <cmath>
#include <regex>
#include <set>

#include <yaml-cpp/yaml.h>

#include "bsdr/errors.hpp"
#include "bsdr/io.hpp"

namespace bsdr::io {

namespace {

std::string where(const YAML::Node& n, const std::string& source) {
    const auto m = n.Mark();
    if (m.line < 0) return source + ": ";
    return source + ":" + std::to_string(m.line + 1) + ": ";
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
        throw DomainError(where(n, source_) + msg);
    }

    void expect_map(const YAML::Node& n, const std::string& what, const std::set<std::string>& keys) const {
        if (!n.IsMap()) fail(n, "'" + what + "' must be a mapping");
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (!keys.contains(key)) fail(kv.first, "unknown key '" + key + "' in '" + what + "'");
        }
    }

    template <class T>
    T scalar(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, "'" + what + "' must be a scalar");
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, "'" + what + "' has an invalid value '" + n.Scalar() + "'");
        }
    }

    std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) fail(n, "'" + what + "' must be a list of numbers");
        std::vector<double> out;
        for (const auto& v : n) out.push_back(scalar<double>(v, what));
        return out;
    }

    Eigen::VectorXd vector(const YAML::Node& n, const std::string& what) const {
        const auto v = numbers(n, what);
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    Cell cell(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence() || n.size() != 2) fail(n, "'" + what + "' must be an [x, y] pair");
        return {scalar<int>(n[0], what), scalar<int>(n[1], what)};
    }

    std::vector<Cell> cells(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) fail(n, "'" + what + "' must be a list of [x, y] pairs");
        std::vector<Cell> out;
        for (const auto& c : n) out.push_back(cell(c, what));
        return out;
    }

    const std::string& source() const noexcept { return source_; }

private:
    std::string source_;
};

GridSpec parse_grid(const YAML::Node& n, const Reader& r) {
    r.expect_map(n, "grid", {"width", "height", "obstacles", "start", "goals", "horizon", "feature_map"});
    for (const char* key : {"width", "height", "start", "horizon"}) {
        if (!n[key]) r.fail(n, std::string("'grid' needs '") + key + "'");
    }
    const auto fm = n["feature_map"] ? r.scalar<std::string>(n["feature_map"], "grid.feature_map")
                                     : std::string("bias_goal_dist");
    try {
        return GridSpec(r.scalar<int>(n["width"], "grid.width"), r.scalar<int>(n["height"], "grid.height"),
                        n["obstacles"] ? r.cells(n["obstacles"], "grid.obstacles") : std::vector<Cell>{},
                        r.cell(n["start"], "grid.start"),
                        n["goals"] ? r.cells(n["goals"], "grid.goals") : std::vector<Cell>{},
                        r.scalar<int>(n["horizon"], "grid.horizon"), feature_map_from_string(fm));
    } catch (const DomainError& e) {
        r.fail(n, e.what());
    }
}

Prior parse_prior(const YAML::Node& section, const std::string& what, const Reader& r, Prior fallback) {
    Prior p = fallback;
    if (section["prior"]) {
        try {
            p.kind = prior_kind_from_string(r.scalar<std::string>(section["prior"], what + ".prior"));
        } catch (const DomainError& e) {
            r.fail(section["prior"], e.what());
        }
    }
    if (section["sigma"]) {
        p.sigma = r.scalar<double>(section["sigma"], what + ".sigma");
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) r.fail(section["sigma"], "'" + what + ".sigma' must be positive");
    }
    return p;
}

JointParams parse_params(const YAML::Node& n, const Reader& r) {
    r.expect_map(n, "params", {"theta_r", "theta_b"});
    if (!n["theta_r"] || !n["theta_b"]) r.fail(n, "'params' needs 'theta_r' and 'theta_b'");
    JointParams p;
    p.theta_r = r.vector(n["theta_r"], "params.theta_r");
    if (!n["theta_b"].IsMap()) r.fail(n["theta_b"], "'params.theta_b' must map agent ids to vectors");
    for (const auto& kv : n["theta_b"]) {
        p.theta_b[kv.first.as<std::string>()] = r.vector(kv.second, "params.theta_b");
    }
    return p;
}

PopulationConfig parse_population(const YAML::Node& n, const Reader& r) {
    r.expect_map(n, "population", {"theta_r", "groups"});
    if (!n["theta_r"] || !n["groups"] || !n["groups"].IsSequence()) {
        r.fail(n, "'population' needs 'theta_r' and a list of 'groups'");
    }
    PopulationConfig pop;
    pop.theta_r = r.vector(n["theta_r"], "population.theta_r");
    for (const auto& g : n["groups"]) {
        r.expect_map(g, "population.groups[]", {"count", "theta_b", "theta_b_lo", "theta_b_hi"});
        AgentGroup group;
        group.count = g["count"] ? r.scalar<int>(g["count"], "count") : 1;
        if (g["theta_b"]) {
            if (g["theta_b_lo"] || g["theta_b_hi"]) r.fail(g, "give either 'theta_b' or 'theta_b_lo'/'theta_b_hi'");
            group.theta_b_lo = group.theta_b_hi = r.vector(g["theta_b"], "theta_b");
        } else {
            if (!g["theta_b_lo"] || !g["theta_b_hi"]) r.fail(g, "a group needs 'theta_b' or both bounds");
            group.theta_b_lo = r.vector(g["theta_b_lo"], "theta_b_lo");
            group.theta_b_hi = r.vector(g["theta_b_hi"], "theta_b_hi");
        }
        pop.groups.push_back(std::move(group));
    }
    return pop;
}

std::vector<GridAxis> parse_axes(const YAML::Node& n, const Reader& r) {
    if (!n.IsSequence()) r.fail(n, "'posterior.axes' must be a list");
    std::vector<GridAxis> axes;
    for (const auto& a : n) {
        r.expect_map(a, "posterior.axes[]", {"coordinate", "values", "from", "to", "count"});
        if (!a["coordinate"]) r.fail(a, "an axis needs 'coordinate'");
        GridAxis axis;
        try {
            axis.coord = parse_coordinate(r.scalar<std::string>(a["coordinate"], "coordinate"));
        } catch (const DomainError& e) {
            r.fail(a["coordinate"], e.what());
        }
        if (a["values"]) {
            if (a["from"] || a["to"] || a["count"]) r.fail(a, "give either 'values' or 'from'/'to'/'count'");
            axis.values = r.numbers(a["values"], "values");
        } else {
            if (!a["from"] || !a["to"] || !a["count"]) r.fail(a, "an axis needs 'values' or 'from'/'to'/'count'");
            const double lo = r.scalar<double>(a["from"], "from");
            const double hi = r.scalar<double>(a["to"], "to");
            const int count = r.scalar<int>(a["count"], "count");
            if (count < 1) r.fail(a["count"], "'count' must be at least 1");
            for (int k = 0; k < count; ++k) {
                axis.values.push_back(count == 1 ? lo : lo + (hi - lo) * k / (count - 1));
            }
        }
        axes.push_back(std::move(axis));
    }
    return axes;
}

}  // namespace

Coordinate parse_coordinate(const std::string& label) {
    static const std::regex reward(R"(theta_r\[(\d+)\])");
    static const std::regex rationality(R"(theta_b\[([^\]]+)\]\[(\d+)\])");
    std::smatch m;
    Coordinate c;
    if (std::regex_match(label, m, reward)) {
        c.block = Coordinate::Block::reward;
        c.index = std::stoi(m[1].str());
        return c;
    }
    if (std::regex_match(label, m, rationality)) {
        c.block = Coordinate::Block::rationality;
        c.agent = m[1].str();
        c.index = std::stoi(m[2].str());
        return c;
    }
    throw DomainError("coordinate '" + label + "' is neither theta_r[i] nor theta_b[agent][i]");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw DomainError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    const Reader r(source);
    RunConfig cfg;
    if (root.IsNull()) return cfg;
    r.expect_map(root, "<top level>",
                 {"grid", "params", "population", "trajectories_per_agent", "dataset", "posterior", "fit",
                  "appendix", "goal_inference", "experiment", "oracle"});
    ExperimentConfig& ex = cfg.experiment;

    if (root["grid"]) {
        ex.spec = parse_grid(root["grid"], r);
        cfg.has_grid = true;
    }
    if (root["params"]) cfg.params = parse_params(root["params"], r);
    if (root["population"]) {
        ex.population = parse_population(root["population"], r);
    } else if (cfg.params) {
        ex.population.theta_r = cfg.params->theta_r;
        for (const auto& [_, b] : cfg.params->theta_b) ex.population.groups.push_back({1, b, b});
    }
    if (root["trajectories_per_agent"]) {
        ex.trajectories_per_agent = r.scalar<int>(root["trajectories_per_agent"], "trajectories_per_agent");
    }
    if (root["dataset"]) {
        std::filesystem::path p = r.scalar<std::string>(root["dataset"], "dataset");
        cfg.dataset = p.is_absolute() ? p : base_dir / p;
    }

    if (const auto n = root["posterior"]) {
        r.expect_map(n, "posterior", {"prior", "sigma", "max_points", "nonnegative_beta", "axes"});
        ex.grid_prior = parse_prior(n, "posterior", r, ex.grid_prior);
        if (n["max_points"]) ex.grid_options.max_points = r.scalar<std::size_t>(n["max_points"], "max_points");
        if (n["nonnegative_beta"]) {
            ex.grid_options.nonnegative_beta = r.scalar<bool>(n["nonnegative_beta"], "nonnegative_beta");
        }
        if (n["axes"]) ex.grid_axes = parse_axes(n["axes"], r);
    }

    if (const auto n = root["fit"]) {
        r.expect_map(n, "fit",
                     {"prior", "sigma", "step_size", "max_iterations", "tolerance", "objective_tolerance", "armijo", "backtrack",
                      "max_backtracks", "lbfgs_memory", "bias_only_rationality", "nonnegative_beta"});
        ex.fit_prior = parse_prior(n, "fit", r, ex.fit_prior);
        MleConfig& f = ex.fit;
        if (n["step_size"]) f.step_size = r.scalar<double>(n["step_size"], "step_size");
        if (n["max_iterations"]) f.max_iterations = r.scalar<int>(n["max_iterations"], "max_iterations");
        if (n["tolerance"]) f.tolerance = r.scalar<double>(n["tolerance"], "tolerance");
        if (n["objective_tolerance"]) {
            f.objective_tolerance = r.scalar<double>(n["objective_tolerance"], "objective_tolerance");
        }
        if (n["armijo"]) f.armijo = r.scalar<double>(n["armijo"], "armijo");
        if (n["backtrack"]) f.backtrack = r.scalar<double>(n["backtrack"], "backtrack");
        if (n["max_backtracks"]) f.max_backtracks = r.scalar<int>(n["max_backtracks"], "max_backtracks");
        if (n["lbfgs_memory"]) f.lbfgs_memory = r.scalar<int>(n["lbfgs_memory"], "lbfgs_memory");
        if (n["bias_only_rationality"]) {
            f.bias_only_rationality = r.scalar<bool>(n["bias_only_rationality"], "bias_only_rationality");
        }
        if (n["nonnegative_beta"]) f.nonnegative_beta = r.scalar<bool>(n["nonnegative_beta"], "nonnegative_beta");
        if (!(f.step_size > 0.0) || f.max_iterations < 0 || !(f.tolerance >= 0.0) || !(f.backtrack > 0.0) ||
            !(f.backtrack < 1.0) || f.max_backtracks < 1 || f.lbfgs_memory < 0) {
            r.fail(n, "'fit' has out-of-range optimizer settings");
        }
    }

    if (const auto n = root["appendix"]) {
        r.expect_map(n, "appendix", {"step_size", "max_iterations", "tolerance"});
        if (n["step_size"]) cfg.appendix.step_size = r.scalar<double>(n["step_size"], "step_size");
        if (n["max_iterations"]) cfg.appendix.max_iterations = r.scalar<int>(n["max_iterations"], "max_iterations");
        if (n["tolerance"]) cfg.appendix.tolerance = r.scalar<double>(n["tolerance"], "tolerance");
    }

    if (const auto n = root["goal_inference"]) {
        r.expect_map(n, "goal_inference", {"candidates", "prior", "fractions"});
        if (n["candidates"]) ex.goal_candidates = r.cells(n["candidates"], "goal_inference.candidates");
        if (n["prior"]) ex.goal_prior = r.numbers(n["prior"], "goal_inference.prior");
        if (n["fractions"]) ex.prefix_fractions = r.numbers(n["fractions"], "goal_inference.fractions");
    }

    if (const auto n = root["experiment"]) {
        r.expect_map(n, "experiment", {"seeds", "dataset_sizes", "roster", "train_fraction"});
        if (const auto s = n["seeds"]) {
            ex.seeds.clear();
            if (s.IsSequence()) {
                for (const auto& v : s) ex.seeds.push_back(r.scalar<std::uint64_t>(v, "seeds"));
            } else {
                r.expect_map(s, "experiment.seeds", {"first", "count"});
                const auto first = s["first"] ? r.scalar<std::uint64_t>(s["first"], "first") : 0;
                const int count = s["count"] ? r.scalar<int>(s["count"], "count") : 1;
                if (count < 1) r.fail(s, "'seeds.count' must be at least 1");
                for (int k = 0; k < count; ++k) ex.seeds.push_back(first + static_cast<std::uint64_t>(k));
            }
        }
        if (const auto s = n["dataset_sizes"]) {
            if (!s.IsSequence()) r.fail(s, "'dataset_sizes' must be a list");
            ex.dataset_sizes.clear();
            for (const auto& v : s) ex.dataset_sizes.push_back(r.scalar<int>(v, "dataset_sizes"));
        }
        if (const auto s = n["roster"]) {
            if (!s.IsSequence()) r.fail(s, "'roster' must be a list");
            ex.roster.clear();
            for (const auto& v : s) ex.roster.push_back(r.scalar<std::string>(v, "roster"));
        }
        if (n["train_fraction"]) ex.train_fraction = r.scalar<double>(n["train_fraction"], "train_fraction");
    }

    if (const auto n = root["oracle"]) {
        r.expect_map(n, "oracle", {"num_specs", "max_width", "max_height", "max_horizon", "seed", "tolerance"});
        OracleSuiteConfig& o = cfg.oracle;
        if (n["num_specs"]) o.num_specs = r.scalar<int>(n["num_specs"], "num_specs");
        if (n["max_width"]) o.max_width = r.scalar<int>(n["max_width"], "max_width");
        if (n["max_height"]) o.max_height = r.scalar<int>(n["max_height"], "max_height");
        if (n["max_horizon"]) o.max_horizon = r.scalar<int>(n["max_horizon"], "max_horizon");
        if (n["seed"]) o.seed = r.scalar<std::uint64_t>(n["seed"], "seed");
        if (n["tolerance"]) o.tolerance = r.scalar<double>(n["tolerance"], "tolerance");
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path(), path.string());
}

}  // namespace bsdr::io
