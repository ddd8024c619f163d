#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"

namespace bsdr {

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

nlohmann::json cells(const std::vector<Cell>& cs) {
    auto j = nlohmann::json::array();
    for (Cell c : cs) j.push_back({c.x, c.y});
    return j;
}

const std::set<std::string> kFittable{"br_aggregate", "br_per_agent", "bsdr"};

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, end);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.trajectories_per_agent < 1) throw DomainError("trajectories_per_agent must be at least 1");
    for (int n : cfg.dataset_sizes) {
        if (n < 0) throw DomainError("dataset sizes must be non-negative");
    }
    if (cfg.seeds.empty()) throw DomainError("at least one seed is required");
    for (double f : cfg.prefix_fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw DomainError("prefix fractions must lie in (0, 1]");
    }
    for (const auto& m : cfg.roster) {
        if (!kFittable.contains(m)) throw DomainError("unknown roster model '" + m + "'");
    }
    if (cfg.population.theta_r.size() != cfg.spec.feature_dim()) {
        throw DomainError("population theta_r has dimension " + std::to_string(cfg.population.theta_r.size()) +
                          ", the feature map has " + std::to_string(cfg.spec.feature_dim()));
    }
    for (const auto& g : cfg.population.groups) {
        if (g.count < 1) throw DomainError("agent group count must be at least 1");
        if (g.theta_b_lo.size() != cfg.spec.feature_dim() || g.theta_b_hi.size() != cfg.spec.feature_dim()) {
            throw DomainError("agent group theta_b bounds must match the feature dimension");
        }
    }
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0)) {
        throw DomainError("train_fraction must lie in (0, 1]");
    }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    const auto& s = cfg.spec;
    j["grid"] = {{"width", s.width()},
                 {"height", s.height()},
                 {"obstacles", cells(s.obstacles())},
                 {"start", {s.start().x, s.start().y}},
                 {"goals", cells(s.goals())},
                 {"horizon", s.horizon()},
                 {"feature_map", std::string(to_string(s.feature_map()))}};
    auto groups = nlohmann::json::array();
    for (const auto& g : cfg.population.groups) {
        groups.push_back({{"count", g.count}, {"theta_b_lo", vec(g.theta_b_lo)}, {"theta_b_hi", vec(g.theta_b_hi)}});
    }
    j["population"] = {{"theta_r", vec(cfg.population.theta_r)}, {"groups", groups}};
    j["trajectories_per_agent"] = cfg.trajectories_per_agent;
    j["dataset_sizes"] = cfg.dataset_sizes;
    j["seeds"] = cfg.seeds;
    auto axes = nlohmann::json::array();
    for (const auto& ax : cfg.grid_axes) axes.push_back({{"coordinate", ax.coord.label()}, {"values", ax.values}});
    j["grid_axes"] = axes;
    j["grid_prior"] = {{"kind", to_string(cfg.grid_prior.kind)}, {"sigma", cfg.grid_prior.sigma}};
    j["grid_options"] = {{"max_points", cfg.grid_options.max_points},
                         {"nonnegative_beta", cfg.grid_options.nonnegative_beta}};
    j["prefix_fractions"] = cfg.prefix_fractions;
    j["goal_candidates"] = cells(cfg.goal_candidates);
    j["goal_prior"] = cfg.goal_prior;
    j["roster"] = cfg.roster;
    j["fit_prior"] = {{"kind", to_string(cfg.fit_prior.kind)}, {"sigma", cfg.fit_prior.sigma}};
    j["fit"] = {{"step_size", cfg.fit.step_size},
                {"max_iterations", cfg.fit.max_iterations},
                {"tolerance", cfg.fit.tolerance},
                {"objective_tolerance", cfg.fit.objective_tolerance},
                {"armijo", cfg.fit.armijo},
                {"backtrack", cfg.fit.backtrack},
                {"max_backtracks", cfg.fit.max_backtracks},
                {"lbfgs_memory", cfg.fit.lbfgs_memory},
                {"bias_only_rationality", cfg.fit.bias_only_rationality},
                {"nonnegative_beta", cfg.fit.nonnegative_beta}};
    j["train_fraction"] = cfg.train_fraction;
    return j;
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> Report::conditions() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (std::find(out.begin(), out.end(), r.condition) == out.end()) out.push_back(r.condition);
    }
    return out;
}

std::vector<double> Report::column(const std::string& condition, const std::string& metric) const {
    const auto it = std::find(metrics.begin(), metrics.end(), metric);
    if (it == metrics.end()) throw DomainError("report has no metric '" + metric + "'");
    const auto k = static_cast<std::size_t>(it - metrics.begin());
    std::vector<double> out;
    for (const auto& r : rows) {
        if (r.condition == condition) out.push_back(r.values.at(k));
    }
    return out;
}

double Report::mean(const std::string& condition, const std::string& metric) const {
    const auto col = column(condition, metric);
    if (col.empty()) throw DomainError("report has no rows for condition '" + condition + "'");
    double s = 0.0;
    for (double v : col) s += v;
    return s / static_cast<double>(col.size());
}

nlohmann::json Report::to_json() const {
    nlohmann::json j;
    j["experiment"] = name;
    j["config_fingerprint"] = config_fingerprint;
    j["metrics"] = metrics;
    auto rs = nlohmann::json::array();
    for (const auto& r : rows) rs.push_back({{"seed", r.seed}, {"condition", r.condition}, {"values", r.values}});
    j["rows"] = rs;
    auto summary = nlohmann::json::object();
    for (const auto& c : conditions()) {
        auto entry = nlohmann::json::object();
        for (const auto& m : metrics) entry[m] = mean(c, m);
        summary[c] = entry;
    }
    j["summary"] = summary;
    j["details"] = details;
    return j;
}

std::string Report::to_csv() const {
    std::ostringstream os;
    os << "seed,condition";
    for (const auto& m : metrics) os << ',' << csv_field(m);
    os << "\r\n";
    for (const auto& r : rows) {
        os << r.seed << ',' << csv_field(r.condition);
        for (double v : r.values) os << ',' << format_number(v);
        os << "\r\n";
    }
    return os.str();
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"parameter_recovery", "goal_inference", "generalization",
                                                "action_prediction"};
    return names;
}

Report run_experiment(const std::string& name, const ExperimentConfig& cfg) {
    if (name == "parameter_recovery") return run_parameter_recovery(cfg);
    if (name == "goal_inference") return run_goal_inference(cfg);
    if (name == "generalization") return run_generalization(cfg);
    if (name == "action_prediction") return run_action_prediction(cfg);
    throw DomainError("unknown experiment '" + name + "'");
}

}  // namespace bsdr
