#pragma once

// Brute-force reference implementations for tests. They share only GridSpec
// (layout and per-cell features) with the library and re-derive dynamics,
// scores and probabilities by direct enumeration.

#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "bsdr/gridworld.hpp"
#include "bsdr/model.hpp"
#include "bsdr/rng.hpp"

namespace oracle {

using bsdr::Cell;
using bsdr::GridSpec;

struct Path {
    std::vector<int> actions;
    std::vector<Cell> states;
};

inline Cell step(Cell s, int a, const GridSpec& spec) {
    static constexpr int dx[] = {0, 0, -1, 1, 0};
    static constexpr int dy[] = {-1, 1, 0, 0, 0};
    const Cell n{s.x + dx[a], s.y + dy[a]};
    return spec.is_free(n) ? n : s;
}

inline void extend(const GridSpec& spec, Path& cur, std::vector<Path>& out) {
    if (static_cast<int>(cur.actions.size()) == spec.horizon()) {
        out.push_back(cur);
        return;
    }
    for (int a = 0; a < 5; ++a) {
        cur.actions.push_back(a);
        cur.states.push_back(step(cur.states.back(), a, spec));
        extend(spec, cur, out);
        cur.actions.pop_back();
        cur.states.pop_back();
    }
}

/// All 5^T action sequences from the start, lexicographic in actions.
inline std::vector<Path> all_paths(const GridSpec& spec) {
    std::vector<Path> out;
    Path cur;
    cur.states.push_back(spec.start());
    extend(spec, cur, out);
    return out;
}

/// -sum_s beta(s) c(s), evaluated state by state.
inline double score(const std::vector<Cell>& states, const bsdr::BsdrParams& p, const GridSpec& spec) {
    double total = 0.0;
    for (Cell s : states) {
        const Eigen::VectorXd& phi = spec.features(spec.index(s));
        total -= p.theta_b.dot(phi) * p.theta_r.dot(phi);
    }
    return total;
}

inline double log_z(const bsdr::BsdrParams& p, const GridSpec& spec) {
    const auto paths = all_paths(spec);
    double peak = -INFINITY;
    std::vector<double> scores;
    for (const auto& path : paths) {
        scores.push_back(score(path.states, p, spec));
        peak = std::max(peak, scores.back());
    }
    double acc = 0.0;
    for (double v : scores) acc += std::exp(v - peak);
    return peak + std::log(acc);
}

/// Probability of every action sequence, in all_paths order.
inline std::vector<double> path_probs(const bsdr::BsdrParams& p, const GridSpec& spec) {
    const double lz = log_z(p, spec);
    std::vector<double> out;
    for (const auto& path : all_paths(spec)) out.push_back(std::exp(score(path.states, p, spec) - lz));
    return out;
}

/// E[sum_s phi(s) phi(s)^T] by enumeration.
inline Eigen::MatrixXd expected_phi(const bsdr::BsdrParams& p, const GridSpec& spec) {
    const auto paths = all_paths(spec);
    const auto probs = path_probs(p, spec);
    const int d = spec.feature_dim();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (Cell s : paths[i].states) {
            const Eigen::VectorXd& phi = spec.features(spec.index(s));
            m += probs[i] * phi * phi.transpose();
        }
    }
    return m;
}

/// Shortest path length between free cells by breadth-first search; -1 when
/// unreachable.
inline int bfs_distance(const GridSpec& spec, Cell from, Cell to) {
    std::vector<int> dist(static_cast<std::size_t>(spec.num_cells()), -1);
    std::vector<Cell> queue{from};
    dist[static_cast<std::size_t>(spec.index(from))] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const Cell c = queue[head];
        if (c == to) return dist[static_cast<std::size_t>(spec.index(c))];
        for (int a = 0; a < 4; ++a) {
            const Cell n = step(c, a, spec);
            auto& d = dist[static_cast<std::size_t>(spec.index(n))];
            if (d < 0) {
                d = dist[static_cast<std::size_t>(spec.index(c))] + 1;
                queue.push_back(n);
            }
        }
    }
    return -1;
}

/// Central differences of f at x with step h.
template <class F>
Eigen::VectorXd central_difference(F&& f, const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x;
        Eigen::VectorXd b = x;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

}  // namespace oracle
