#include "bsdr/gridworld.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "bsdr/errors.hpp"

namespace bsdr {

namespace {

constexpr std::array<Cell, kNumActions> kMoves{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}, {0, 0}}};

std::string describe(Cell c) {
    std::ostringstream os;
    os << '[' << c.x << ',' << c.y << ']';
    return os.str();
}

struct Fnv1a {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void add(std::int64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
};

bool uses_goal_distance(FeatureMap fm) {
    return fm == FeatureMap::bias_goal_dist || fm == FeatureMap::bias_goal_dist_side;
}

}  // namespace

std::string_view to_string(Action a) {
    switch (a) {
        case Action::up: return "up";
        case Action::down: return "down";
        case Action::left: return "left";
        case Action::right: return "right";
        case Action::stay: return "stay";
    }
    return "?";
}

std::string_view to_string(FeatureMap fm) {
    switch (fm) {
        case FeatureMap::bias_goal_dist: return "bias_goal_dist";
        case FeatureMap::one_hot: return "one_hot";
        case FeatureMap::goal_indicators: return "goal_indicators";
        case FeatureMap::bias_goal_dist_side: return "bias_goal_dist_side";
    }
    return "?";
}

FeatureMap feature_map_from_string(std::string_view name) {
    for (auto fm : {FeatureMap::bias_goal_dist, FeatureMap::one_hot, FeatureMap::goal_indicators,
                    FeatureMap::bias_goal_dist_side}) {
        if (to_string(fm) == name) return fm;
    }
    throw DomainError("unknown feature map '" + std::string(name) + "'");
}

GridSpec::GridSpec() : goals_{Cell{0, 0}} { build(); }

GridSpec::GridSpec(int width, int height, std::vector<Cell> obstacles, Cell start,
                   std::vector<Cell> goals, int horizon, FeatureMap feature_map)
    : width_(width),
      height_(height),
      obstacles_(std::move(obstacles)),
      start_(start),
      goals_(std::move(goals)),
      horizon_(horizon),
      feature_map_(feature_map) {
    build();
}

bool GridSpec::has_bias_feature() const noexcept {
    return feature_map_ != FeatureMap::one_hot;
}

bool GridSpec::in_bounds(Cell c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
}

bool GridSpec::is_obstacle(Cell c) const noexcept {
    return in_bounds(c) && !free_[static_cast<std::size_t>(index(c))];
}

void GridSpec::build() {
    if (width_ < 1 || height_ < 1) throw DomainError("grid width and height must be positive");
    if (horizon_ < 1) throw DomainError("horizon must be positive");
    std::sort(obstacles_.begin(), obstacles_.end());
    obstacles_.erase(std::unique(obstacles_.begin(), obstacles_.end()), obstacles_.end());

    const auto n = static_cast<std::size_t>(num_cells());
    free_.assign(n, true);
    for (Cell o : obstacles_) {
        if (!in_bounds(o)) throw DomainError("obstacle " + describe(o) + " is out of bounds");
        free_[static_cast<std::size_t>(index(o))] = false;
    }
    if (!is_free(start_)) throw DomainError("start " + describe(start_) + " is out of bounds or an obstacle");
    for (Cell g : goals_) {
        if (!is_free(g)) throw DomainError("goal " + describe(g) + " is out of bounds or an obstacle");
    }
    if (uses_goal_distance(feature_map_) && goals_.empty()) {
        throw DomainError(std::string(to_string(feature_map_)) + " requires at least one goal");
    }

    successors_.assign(n, {});
    for (int idx = 0; idx < num_cells(); ++idx) {
        const Cell c = cell(idx);
        for (int a = 0; a < kNumActions; ++a) {
            const Cell next{c.x + kMoves[static_cast<std::size_t>(a)].x,
                            c.y + kMoves[static_cast<std::size_t>(a)].y};
            successors_[static_cast<std::size_t>(idx)][static_cast<std::size_t>(a)] =
                is_free(next) ? index(next) : idx;
        }
    }

    switch (feature_map_) {
        case FeatureMap::bias_goal_dist: feature_dim_ = 2; break;
        case FeatureMap::one_hot: feature_dim_ = num_cells(); break;
        case FeatureMap::goal_indicators: feature_dim_ = 1 + static_cast<int>(goals_.size()); break;
        case FeatureMap::bias_goal_dist_side: feature_dim_ = 3; break;
    }

    std::vector<int> dist(n, 0);
    int max_dist = 0;
    if (uses_goal_distance(feature_map_)) {
        for (int idx = 0; idx < num_cells(); ++idx) {
            const Cell c = cell(idx);
            int best = std::numeric_limits<int>::max();
            for (Cell g : goals_) best = std::min(best, std::abs(c.x - g.x) + std::abs(c.y - g.y));
            dist[static_cast<std::size_t>(idx)] = best;
            if (free_[static_cast<std::size_t>(idx)]) max_dist = std::max(max_dist, best);
        }
    }

    features_.assign(n, Eigen::VectorXd::Zero(feature_dim_));
    for (int idx = 0; idx < num_cells(); ++idx) {
        auto& phi = features_[static_cast<std::size_t>(idx)];
        const Cell c = cell(idx);
        switch (feature_map_) {
            case FeatureMap::bias_goal_dist:
            case FeatureMap::bias_goal_dist_side: {
                phi[0] = 1.0;
                const double d = dist[static_cast<std::size_t>(idx)];
                phi[1] = max_dist == 0 ? 1.0 : 1.0 - d / static_cast<double>(max_dist);
                if (feature_map_ == FeatureMap::bias_goal_dist_side) {
                    phi[2] = c.x >= width_ / 2 ? 1.0 : 0.0;
                }
                break;
            }
            case FeatureMap::one_hot: phi[idx] = 1.0; break;
            case FeatureMap::goal_indicators:
                phi[0] = 1.0;
                for (std::size_t g = 0; g < goals_.size(); ++g) {
                    if (goals_[g] == c) phi[static_cast<Eigen::Index>(g + 1)] = 1.0;
                }
                break;
        }
    }

    Fnv1a h;
    h.add(width_);
    h.add(height_);
    h.add(static_cast<std::int64_t>(obstacles_.size()));
    for (Cell o : obstacles_) {
        h.add(o.x);
        h.add(o.y);
    }
    h.add(start_.x);
    h.add(start_.y);
    h.add(static_cast<std::int64_t>(goals_.size()));
    for (Cell g : goals_) {
        h.add(g.x);
        h.add(g.y);
    }
    h.add(horizon_);
    h.add(static_cast<std::int64_t>(feature_map_));
    fingerprint_ = h.h;
}

GridSpec GridSpec::with_goals(std::vector<Cell> goals) const {
    return GridSpec(width_, height_, obstacles_, start_, std::move(goals), horizon_, feature_map_);
}

GridSpec GridSpec::with_horizon(int horizon) const {
    return GridSpec(width_, height_, obstacles_, start_, goals_, horizon, feature_map_);
}

std::array<Cell, kNumActions> neighbors(Cell s, const GridSpec& spec) {
    if (!spec.is_free(s)) throw DomainError("state " + describe(s) + " is not a free cell");
    std::array<Cell, kNumActions> out{};
    const auto& succ = spec.successors(spec.index(s));
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = spec.cell(succ[a]);
    return out;
}

Eigen::VectorXd featurize(Cell s, const GridSpec& spec) {
    if (!spec.is_free(s)) throw DomainError("state " + describe(s) + " is not a free cell");
    return spec.features(spec.index(s));
}

int transition_multiplicity(Cell from, Cell to, const GridSpec& spec) {
    if (!spec.is_free(from) || !spec.is_free(to)) return 0;
    const int target = spec.index(to);
    const auto& succ = spec.successors(spec.index(from));
    return static_cast<int>(std::count(succ.begin(), succ.end(), target));
}

void validate_prefix(const std::vector<Cell>& prefix, const GridSpec& spec) {
    if (prefix.empty()) throw DomainError("prefix is empty");
    if (static_cast<int>(prefix.size()) > spec.horizon() + 1) {
        throw DomainError("prefix has " + std::to_string(prefix.size()) +
                          " states, more than horizon+1 = " + std::to_string(spec.horizon() + 1));
    }
    if (prefix.front() != spec.start()) {
        throw DomainError("step 0: state " + describe(prefix.front()) + " is not the start " +
                          describe(spec.start()));
    }
    for (std::size_t t = 0; t < prefix.size(); ++t) {
        if (!spec.is_free(prefix[t])) {
            throw DomainError("step " + std::to_string(t) + ": state " + describe(prefix[t]) +
                              " is out of bounds or an obstacle");
        }
        if (t > 0 && transition_multiplicity(prefix[t - 1], prefix[t], spec) == 0) {
            throw DomainError("step " + std::to_string(t) + ": " + describe(prefix[t - 1]) + " -> " +
                              describe(prefix[t]) + " is not a legal move");
        }
    }
}

void validate_trajectory(const Trajectory& xi, const GridSpec& spec) {
    if (static_cast<int>(xi.states.size()) != spec.horizon() + 1) {
        throw DomainError("trajectory has " + std::to_string(xi.states.size()) +
                          " states, expected horizon+1 = " + std::to_string(spec.horizon() + 1));
    }
    validate_prefix(xi.states, spec);
    if (xi.actions.empty()) return;
    if (static_cast<int>(xi.actions.size()) != spec.horizon()) {
        throw DomainError("trajectory has " + std::to_string(xi.actions.size()) +
                          " actions, expected horizon = " + std::to_string(spec.horizon()));
    }
    for (std::size_t t = 0; t < xi.actions.size(); ++t) {
        const int a = xi.actions[t];
        if (a < 0 || a >= kNumActions) {
            throw DomainError("step " + std::to_string(t) + ": action index " + std::to_string(a) +
                              " out of range");
        }
        const int next = spec.successors(spec.index(xi.states[t]))[static_cast<std::size_t>(a)];
        if (next != spec.index(xi.states[t + 1])) {
            throw DomainError("step " + std::to_string(t + 1) + ": action " +
                              std::string(to_string(static_cast<Action>(a))) + " from " +
                              describe(xi.states[t]) + " does not lead to " +
                              describe(xi.states[t + 1]));
        }
    }
}

std::vector<Trajectory> enumerate_trajectories(const GridSpec& spec, std::uint64_t cap) {
    const int horizon = spec.horizon();
    std::uint64_t count = 1;
    for (int t = 0; t < horizon; ++t) {
        if (count > cap / kNumActions) {
            throw SizeError("5^" + std::to_string(horizon) + " action sequences exceed the oracle cap of " +
                            std::to_string(cap));
        }
        count *= kNumActions;
    }
    if (count > cap) {
        throw SizeError("5^" + std::to_string(horizon) + " action sequences exceed the oracle cap of " +
                        std::to_string(cap));
    }

    std::vector<Trajectory> out;
    out.reserve(count);
    std::vector<int> actions(static_cast<std::size_t>(horizon), 0);
    std::vector<int> path(static_cast<std::size_t>(horizon) + 1, spec.start_index());
    for (std::uint64_t n = 0; n < count; ++n) {
        for (int t = 0; t < horizon; ++t) {
            path[static_cast<std::size_t>(t) + 1] =
                spec.successors(path[static_cast<std::size_t>(t)])[static_cast<std::size_t>(actions[static_cast<std::size_t>(t)])];
        }
        Trajectory xi;
        xi.states.reserve(path.size());
        for (int idx : path) xi.states.push_back(spec.cell(idx));
        xi.actions = actions;
        out.push_back(std::move(xi));

        for (int t = horizon - 1; t >= 0; --t) {
            if (++actions[static_cast<std::size_t>(t)] < kNumActions) break;
            actions[static_cast<std::size_t>(t)] = 0;
        }
    }
    return out;
}

}  // namespace bsdr
