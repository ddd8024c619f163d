#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "bsdr/errors.hpp"
#include "bsdr/experiments.hpp"
#include "bsdr/numeric.hpp"
#include "bsdr/rng.hpp"

namespace bsdr {

std::string agent_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "agent_%03zu", index);
    return buf;
}

JointParams draw_population(const PopulationConfig& population, std::uint64_t seed) {
    JointParams p;
    p.theta_r = population.theta_r;
    Engine engine(derive_seed(seed, 0x706f70ULL));
    std::size_t index = 0;
    for (const auto& group : population.groups) {
        if (group.count < 1) throw DomainError("agent group count must be at least 1");
        if (group.theta_b_lo.size() != group.theta_b_hi.size()) {
            throw DomainError("agent group bounds have different dimensions");
        }
        for (int k = 0; k < group.count; ++k) {
            Eigen::VectorXd b(group.theta_b_lo.size());
            for (Eigen::Index d = 0; d < b.size(); ++d) {
                const double lo = group.theta_b_lo[d];
                const double hi = group.theta_b_hi[d];
                b[d] = lo == hi ? lo : uniform(engine, lo, hi);
            }
            p.theta_b.emplace(agent_name(index++), std::move(b));
        }
    }
    return p;
}

Dataset simulate_dataset(const GridSpec& spec, const JointParams& params, std::size_t per_agent,
                         std::uint64_t seed) {
    Dataset data(spec);
    std::uint64_t stream = 0;
    for (const auto& [id, b] : params.theta_b) {
        const BsdrParams p{params.theta_r, b};
        const SoftBackup backup = log_partition(p, spec);
        auto trajs = sample_trajectories(p, spec, backup, per_agent, derive_seed(seed, stream++), id);
        if (!trajs.empty()) data.by_agent.emplace(id, std::move(trajs));
    }
    return data;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, std::uint64_t seed,
                                                                            double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw DomainError("train fraction must be in (0, 1]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Engine engine(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(engine) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> held(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(held.begin(), held.end());
    return {std::move(train), std::move(held)};
}

Split split_dataset(const Dataset& data, std::uint64_t seed, double train_fraction) {
    Split out{Dataset(data.spec), Dataset(data.spec)};
    std::uint64_t stream = 0;
    for (const auto& [id, trajs] : data.by_agent) {
        const auto [train, held] = split_indices(trajs.size(), derive_seed(seed, stream++), train_fraction);
        for (std::size_t i : train) out.train.by_agent[id].push_back(trajs[i]);
        for (std::size_t i : held) out.held_out.by_agent[id].push_back(trajs[i]);
    }
    return out;
}

BsdrParams FittedModel::for_agent(const std::string& agent) const {
    if (pooled) return {params.theta_r, params.theta_b.begin()->second};
    return params.for_agent(agent);
}

FittedModel fit_model(const std::string& name, const Dataset& train, const Prior& prior, const MleConfig& cfg) {
    FittedModel m;
    m.name = name;
    MleConfig c = cfg;
    MleResult r;
    if (name == "br_aggregate") {
        if (!train.spec.has_bias_feature()) throw UnsupportedConfiguration("br_aggregate needs a bias feature");
        c.bias_only_rationality = true;
        c.init.reset();
        r = mle_fit(pooled(train), prior, c);
        m.pooled = true;
    } else if (name == "br_per_agent") {
        if (!train.spec.has_bias_feature()) throw UnsupportedConfiguration("br_per_agent needs a bias feature");
        c.bias_only_rationality = true;
        c.init.reset();
        r = mle_fit(train, prior, c);
    } else if (name == "bsdr") {
        r = mle_fit(train, prior, c);
    } else {
        throw DomainError("unknown model '" + name + "'");
    }
    m.params = std::move(r.params);
    m.diagnostics = std::move(r.diagnostics);
    return m;
}

double fit_br_beta(const std::vector<std::pair<const GridSpec*, const Trajectory*>>& data,
                   const Eigen::VectorXd& theta_r) {
    if (data.empty()) throw DomainError("no trajectories to fit beta");
    // Group by spec so each partition function is computed once per beta.
    std::vector<std::pair<const GridSpec*, std::pair<double, int>>> groups;
    for (const auto& [spec, xi] : data) {
        validate_trajectory(*xi, *spec);
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return *g.first == *spec; });
        if (it == groups.end()) {
            groups.push_back({spec, {0.0, 0}});
            it = groups.end() - 1;
        }
        it->second.first += trajectory_cost(*xi, theta_r, *spec);
        it->second.second += 1;
    }
    auto loglik = [&](double beta) {
        double ll = 0.0;
        for (const auto& [spec, stats] : groups) {
            ll += -beta * stats.first - stats.second * br_log_partition(theta_r, beta, *spec);
        }
        return ll;
    };
    // Concave in beta: bracket by doubling, then golden-section search.
    double hi = 1.0;
    while (hi < 1e4 && loglik(2.0 * hi) > loglik(hi)) hi *= 2.0;
    double lo = 0.0;
    hi = std::min(2.0 * hi, 2e4);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - ratio * (hi - lo);
    double b = lo + ratio * (hi - lo);
    double fa = loglik(a);
    double fb = loglik(b);
    for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, hi); ++it) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = loglik(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = loglik(a);
        }
    }
    const double best = 0.5 * (lo + hi);
    return loglik(0.0) >= loglik(best) ? 0.0 : best;
}

}  // namespace bsdr
