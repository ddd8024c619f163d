#include <algorithm>
#include <cmath>
#include <deque>

#include "bsdr/errors.hpp"
#include "bsdr/inference.hpp"

namespace bsdr {

namespace {

// Flattened view of JointParams: theta_r, then theta_b per agent in map order.
double dot(const JointParams& a, const JointParams& b) {
    double d = a.theta_r.dot(b.theta_r);
    for (const auto& [id, v] : a.theta_b) d += v.dot(b.theta_b.at(id));
    return d;
}

JointParams axpy(const JointParams& x, double alpha, const JointParams& dir) {
    JointParams out = x;
    out.theta_r += alpha * dir.theta_r;
    for (auto& [id, v] : out.theta_b) v += alpha * dir.theta_b.at(id);
    return out;
}

bool feasible(const JointParams& p, const GridSpec& spec) {
    for (const auto& [_, b] : p.theta_b) {
        for (int s = 0; s < spec.num_cells(); ++s) {
            if (spec.is_free_index(s) && b.dot(spec.features(s)) < 0.0) return false;
        }
    }
    return true;
}

// Orthogonal projection onto the tangent space of sum_i ||theta_b^i||^2 = const,
// optionally after restricting theta_b updates to the bias coordinate.
JointParams tangent_gradient(const JointParams& grad, const JointParams& x, bool bias_only) {
    JointParams g = grad;
    if (bias_only) {
        for (auto& [_, v] : g.theta_b) {
            const double b0 = v.size() > 0 ? v[0] : 0.0;
            v.setZero();
            if (v.size() > 0) v[0] = b0;
        }
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& [id, b] : x.theta_b) {
        num += b.dot(g.theta_b.at(id));
        den += b.squaredNorm();
    }
    if (den > 0.0) {
        const double alpha = num / den;
        for (auto& [id, v] : g.theta_b) v -= alpha * x.theta_b.at(id);
    }
    return g;
}

JointParams scaled(const JointParams& x, double alpha) {
    JointParams out = x;
    out.theta_r *= alpha;
    for (auto& [_, v] : out.theta_b) v *= alpha;
    return out;
}

JointParams difference(const JointParams& a, const JointParams& b) { return axpy(a, -1.0, b); }

struct CurvaturePair {
    JointParams s;
    JointParams y;
    double rho = 0.0;
};

// Two-loop recursion: approximates H^{-1} g from the stored pairs.
JointParams lbfgs_direction(const JointParams& g, const std::deque<CurvaturePair>& pairs) {
    JointParams q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
        alpha[k] = pairs[k].rho * dot(pairs[k].s, q);
        q = axpy(q, -alpha[k], pairs[k].y);
    }
    if (!pairs.empty()) {
        const auto& last = pairs.back();
        q = scaled(q, dot(last.s, last.y) / dot(last.y, last.y));
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double beta = pairs[k].rho * dot(pairs[k].y, q);
        q = axpy(q, alpha[k] - beta, pairs[k].s);
    }
    return q;
}

}  // namespace

ObjectiveEval mle_objective(const DatasetSummary& summary, const GridSpec& spec, const JointParams& params,
                            const Prior& prior) {
    if (params.theta_b.size() != summary.size()) {
        throw DomainError("parameters cover " + std::to_string(params.theta_b.size()) +
                          " agents, dataset has " + std::to_string(summary.size()));
    }
    ObjectiveEval out;
    out.gradient.theta_r = Eigen::VectorXd::Zero(params.theta_r.size());
    for (const auto& [id, s] : summary) {
        const BsdrParams p = params.for_agent(id);
        const SoftBackup backup = log_partition(p, spec);
        const Visitation vis = expected_features(p, spec, backup);
        const double n = s.count;
        out.value += p.theta_b.dot(s.phi.matrix * p.theta_r) + n * backup.log_z();
        out.gradient.theta_r += s.phi.matrix * p.theta_b - n * (vis.expected.matrix * p.theta_b);
        out.gradient.theta_b[id] = s.phi.matrix * p.theta_r - n * (vis.expected.matrix * p.theta_r);
    }
    out.value -= prior.log_density(params);
    out.gradient.theta_r -= prior.grad_theta_r(params.theta_r);
    return out;
}

JointParams gauge_normalize(const JointParams& params) {
    double sq = 0.0;
    for (const auto& [_, b] : params.theta_b) sq += b.squaredNorm();
    if (params.theta_b.empty() || sq == 0.0) return params;
    const double scale = std::sqrt(sq / static_cast<double>(params.theta_b.size()));
    JointParams out = params;
    out.theta_r *= scale;
    for (auto& [_, b] : out.theta_b) b /= scale;
    return out;
}

MleResult mle_fit(const Dataset& data, const Prior& prior, const MleConfig& config) {
    if (prior.kind == Prior::Kind::unit_sphere_uniform) {
        throw UnsupportedConfiguration("mle_fit needs a uniform or gaussian prior");
    }
    if (data.empty()) throw DomainError("mle_fit needs at least one agent with data");
    data.validate();
    const GridSpec& spec = data.spec;
    const int dim = spec.feature_dim();
    const DatasetSummary summary = summarize(data);

    JointParams x;
    if (config.init) {
        x = *config.init;
    } else {
        x.theta_r = Eigen::VectorXd::Zero(dim);
        for (const auto& [id, _] : summary) x.theta_b[id] = bias_only(1.0, dim);
    }
    if (x.theta_r.size() != dim) throw DomainError("initial theta_r has the wrong dimension");
    for (const auto& [id, _] : summary) {
        auto it = x.theta_b.find(id);
        if (it == x.theta_b.end() || it->second.size() != dim) {
            throw DomainError("initial theta_b missing or mis-sized for agent '" + id + "'");
        }
        if (it->second.isZero(0.0)) throw DomainError("initial theta_b of agent '" + id + "' is zero");
    }
    x = gauge_normalize(x);
    if (config.nonnegative_beta && !feasible(x, spec)) {
        throw DomainError("initial point has negative rationality on some state");
    }

    MleResult result;
    auto& diag = result.diagnostics;
    ObjectiveEval cur = mle_objective(summary, spec, x, prior);
    if (!std::isfinite(cur.value)) {
        throw DivergedError("objective is not finite at the initial point", {cur.value});
    }
    diag.objective_trace.push_back(cur.value);

    std::deque<CurvaturePair> pairs;
    JointParams grad = tangent_gradient(cur.gradient, x, config.bias_only_rationality);
    double step = config.step_size;
    for (int it = 0;; ++it) {
        const double gsq = dot(grad, grad);
        diag.gradient_norm = std::sqrt(gsq);
        diag.gradient_norm_trace.push_back(diag.gradient_norm);
        diag.iterations = it;
        if (diag.gradient_norm < config.tolerance) {
            diag.converged = true;
            diag.stop_reason = "gradient_tolerance";
            break;
        }
        const auto& trace = diag.objective_trace;
        if (config.objective_tolerance > 0.0 && trace.size() > 10 &&
            trace[trace.size() - 11] - trace.back() <
                config.objective_tolerance * std::max(1.0, std::abs(trace.back()))) {
            diag.converged = true;
            diag.stop_reason = "objective_tolerance";
            break;
        }
        if (it >= config.max_iterations) {
            diag.hit_iteration_cap = true;
            diag.stop_reason = "iteration_cap";
            break;
        }

        // Quasi-Newton direction projected back onto the tangent space; fall
        // back to the gradient when it is not a descent direction.
        JointParams dir = grad;
        double t0 = step;
        bool quasi_newton = false;
        if (!pairs.empty()) {
            JointParams qn = tangent_gradient(lbfgs_direction(grad, pairs), x, config.bias_only_rationality);
            const double slope = dot(qn, grad);
            if (slope > 1e-12 * std::sqrt(dot(qn, qn)) * diag.gradient_norm) {
                dir = std::move(qn);
                t0 = 1.0;
                quasi_newton = true;
            } else {
                pairs.clear();
            }
        }
        const double slope = dot(dir, grad);

        bool accepted = false;
        bool saw_finite = false;
        double t = t0;
        JointParams next_x;
        ObjectiveEval next;
        for (int k = 0; k < config.max_backtracks; ++k, t *= config.backtrack) {
            JointParams trial = gauge_normalize(axpy(x, -t, dir));
            if (config.nonnegative_beta && !feasible(trial, spec)) continue;
            ObjectiveEval eval = mle_objective(summary, spec, trial, prior);
            if (!std::isfinite(eval.value)) continue;
            saw_finite = true;
            if (eval.value <= cur.value - config.armijo * t * slope) {
                next_x = std::move(trial);
                next = std::move(eval);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!saw_finite) {
                throw DivergedError("objective became non-finite along the descent direction",
                                    diag.objective_trace);
            }
            if (!pairs.empty()) {
                // Retry from a plain gradient step before giving up.
                pairs.clear();
                continue;
            }
            diag.line_search_stalled = true;
            diag.stop_reason = "line_search";
            break;
        }
        JointParams next_grad = tangent_gradient(next.gradient, next_x, config.bias_only_rationality);
        if (config.lbfgs_memory > 0) {
            CurvaturePair pair{difference(next_x, x), difference(next_grad, grad), 0.0};
            const double sy = dot(pair.s, pair.y);
            if (sy > 1e-12 * std::sqrt(dot(pair.s, pair.s) * dot(pair.y, pair.y))) {
                pair.rho = 1.0 / sy;
                pairs.push_back(std::move(pair));
                if (static_cast<int>(pairs.size()) > config.lbfgs_memory) pairs.pop_front();
            }
        }
        if (!quasi_newton) step = t / config.backtrack;
        x = std::move(next_x);
        cur = std::move(next);
        grad = std::move(next_grad);
        diag.objective_trace.push_back(cur.value);
    }

    result.params = std::move(x);
    return result;
}

nlohmann::json to_json(const JointParams& params) {
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    nlohmann::json j;
    j["theta_r"] = vec(params.theta_r);
    j["theta_b"] = nlohmann::json::object();
    for (const auto& [id, b] : params.theta_b) j["theta_b"][id] = vec(b);
    return j;
}

nlohmann::json to_json(const MleDiagnostics& diag) {
    return {{"objective_trace", diag.objective_trace},
            {"gradient_norm_trace", diag.gradient_norm_trace},
            {"gradient_norm", diag.gradient_norm},
            {"iterations", diag.iterations},
            {"converged", diag.converged},
            {"stop_reason", diag.stop_reason},
            {"hit_iteration_cap", diag.hit_iteration_cap},
            {"line_search_stalled", diag.line_search_stalled}};
}

}  // namespace bsdr
