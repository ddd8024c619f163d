#include <cmath>

#include "bsdr/errors.hpp"
#include "bsdr/inference.hpp"

namespace bsdr {

namespace {

using PhiMap = std::map<std::string, Eigen::MatrixXd>;
using ThetaMap = std::map<std::string, Eigen::VectorXd>;

Eigen::VectorXd combined(const PhiMap& phi, const ThetaMap& theta) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(phi.begin()->second.rows());
    for (const auto& [id, m] : phi) v += m * theta.at(id);
    return v;
}

double residual(const Eigen::MatrixXd& phi, const Eigen::VectorXd& v, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd a = 2.0 * phi.transpose() * v;
    const double tt = theta.squaredNorm();
    if (tt == 0.0) return a.norm();
    // lambda minimizing ||a + 2 lambda theta|| is -(a . theta) / (2 ||theta||^2)
    return (a - (a.dot(theta) / tt) * theta).norm();
}

}  // namespace

std::map<std::string, Eigen::MatrixXd> phi_by_agent(const Dataset& data) {
    PhiMap out;
    for (auto& [id, s] : summarize(data)) out.emplace(id, std::move(s.phi.matrix));
    return out;
}

Eigen::VectorXd appendix_theta_r(const PhiMap& phi, const ThetaMap& theta_b) {
    if (phi.empty()) throw DomainError("no agents");
    const Eigen::VectorXd v = combined(phi, theta_b);
    const double norm = v.norm();
    if (norm == 0.0) throw DegenerateSolutionError("sum_i Phi^i theta_b^i vanishes; theta_r is undefined");
    return -v / norm;
}

std::map<std::string, double> lagrange_residual(const JointParams& params, const PhiMap& phi) {
    if (phi.empty()) return {};
    const Eigen::VectorXd v = combined(phi, params.theta_b);
    std::map<std::string, double> out;
    for (const auto& [id, m] : phi) out[id] = residual(m, v, params.theta_b.at(id));
    return out;
}

std::map<std::string, double> lagrange_residual(const JointParams& params, const Dataset& data) {
    return lagrange_residual(params, phi_by_agent(data));
}

AppendixResult appendix_heuristic_fit(const PhiMap& phi, const AppendixConfig& config) {
    if (phi.empty()) throw DomainError("appendix heuristic needs at least one agent");
    const Eigen::Index dim = phi.begin()->second.rows();
    double lipschitz = 0.0;
    for (const auto& [id, m] : phi) {
        if (m.rows() != dim || m.cols() != dim) throw DomainError("Phi of agent '" + id + "' has the wrong shape");
        lipschitz += m.squaredNorm();
    }
    lipschitz *= 2.0;

    ThetaMap theta;
    for (const auto& [id, _] : phi) {
        Eigen::VectorXd init = Eigen::VectorXd::Zero(dim);
        if (auto it = config.init.find(id); it != config.init.end()) {
            init = it->second;
        } else if (dim > 0) {
            init[0] = 1.0;
        }
        if (init.size() != dim || init.norm() == 0.0) {
            throw DomainError("initial theta_b of agent '" + id + "' is zero or mis-sized");
        }
        theta[id] = init.normalized();
    }

    AppendixResult result;
    const double eta = lipschitz > 0.0 ? config.step_size / lipschitz : 0.0;
    for (int it = 0;; ++it) {
        const Eigen::VectorXd v = combined(phi, theta);
        result.objective_trace.push_back(v.squaredNorm());
        double worst = 0.0;
        for (const auto& [id, m] : phi) worst = std::max(worst, residual(m, v, theta.at(id)));
        result.iterations = it;
        if (worst <= config.tolerance) {
            result.converged = true;
            break;
        }
        if (it >= config.max_iterations) break;
        ThetaMap next;
        for (const auto& [id, m] : phi) {
            const Eigen::VectorXd grad = 2.0 * m.transpose() * v;
            Eigen::VectorXd moved = theta.at(id) + eta * grad;
            const double norm = moved.norm();
            next[id] = norm > 0.0 ? Eigen::VectorXd(moved / norm) : theta.at(id);
        }
        theta = std::move(next);
    }

    const Eigen::VectorXd v = combined(phi, theta);
    double scale = 0.0;
    for (const auto& [_, m] : phi) scale = std::max(scale, m.cwiseAbs().maxCoeff());
    if (v.norm() <= 1e-12 * std::max(1.0, scale)) {
        throw DegenerateSolutionError("sum_i Phi^i theta_b^i vanishes at the returned point");
    }
    result.params.theta_b = theta;
    result.params.theta_r = appendix_theta_r(phi, theta);
    result.lagrange_residuals = lagrange_residual(result.params, phi);
    return result;
}

AppendixResult appendix_heuristic_fit(const Dataset& data, const AppendixConfig& config) {
    data.validate();
    return appendix_heuristic_fit(phi_by_agent(data), config);
}

nlohmann::json to_json(const AppendixResult& result) {
    return {{"params", to_json(result.params)},
            {"objective_trace", result.objective_trace},
            {"lagrange_residuals", result.lagrange_residuals},
            {"iterations", result.iterations},
            {"converged", result.converged}};
}

}  // namespace bsdr
