#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace bsdr {

/// A grid cell. `x` is the column, `y` the row; row 0 is the top edge.
struct Cell {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

using State = Cell;

/// Action order is fixed: up (y-1), down (y+1), left (x-1), right (x+1), stay.
enum class Action : int { up = 0, down = 1, left = 2, right = 3, stay = 4 };

inline constexpr int kNumActions = 5;

std::string_view to_string(Action a);

/// Built-in state feature maps.
///  - bias_goal_dist: [1, closeness], closeness = 1 - d/d_max where d is the
///    Manhattan distance to the nearest goal and d_max its maximum over
///    free cells (closeness is 1 everywhere when d_max = 0).
///  - one_hot: indicator of the cell, dimension width*height.
///  - goal_indicators: [1, [s == g_1], ..., [s == g_k]].
///  - bias_goal_dist_side: [1, closeness, [x >= width/2]].
enum class FeatureMap { bias_goal_dist, one_hot, goal_indicators, bias_goal_dist_side };

std::string_view to_string(FeatureMap fm);
FeatureMap feature_map_from_string(std::string_view name);

inline constexpr std::uint64_t kDefaultOracleCap = 10'000'000;

/// Deterministic fixed-horizon GridWorld. Immutable after construction;
/// successor tables and per-cell features are precomputed.
class GridSpec {
public:
    /// 1x1 world, horizon 1, goal at the start.
    GridSpec();
    GridSpec(int width, int height, std::vector<Cell> obstacles, Cell start,
             std::vector<Cell> goals, int horizon, FeatureMap feature_map);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const std::vector<Cell>& obstacles() const noexcept { return obstacles_; }
    Cell start() const noexcept { return start_; }
    const std::vector<Cell>& goals() const noexcept { return goals_; }
    int horizon() const noexcept { return horizon_; }
    FeatureMap feature_map() const noexcept { return feature_map_; }

    int num_cells() const noexcept { return width_ * height_; }
    int feature_dim() const noexcept { return feature_dim_; }
    /// True when feature component 0 is the constant 1.
    bool has_bias_feature() const noexcept;

    bool in_bounds(Cell c) const noexcept;
    bool is_obstacle(Cell c) const noexcept;
    bool is_free(Cell c) const noexcept { return in_bounds(c) && !is_obstacle(c); }
    bool is_free_index(int idx) const noexcept { return free_[static_cast<std::size_t>(idx)]; }

    int index(Cell c) const noexcept { return c.y * width_ + c.x; }
    Cell cell(int idx) const noexcept { return {idx % width_, idx / width_}; }
    int start_index() const noexcept { return index(start_); }

    /// Successor cell indices of the five actions, in action order.
    const std::array<int, kNumActions>& successors(int idx) const {
        return successors_[static_cast<std::size_t>(idx)];
    }
    const Eigen::VectorXd& features(int idx) const {
        return features_[static_cast<std::size_t>(idx)];
    }

    /// Same layout, start, horizon and feature map with a different goal list.
    GridSpec with_goals(std::vector<Cell> goals) const;
    GridSpec with_horizon(int horizon) const;

    /// Stable 64-bit hash of every defining field.
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
        return a.fingerprint_ == b.fingerprint_ && a.width_ == b.width_ &&
               a.height_ == b.height_ && a.obstacles_ == b.obstacles_ &&
               a.start_ == b.start_ && a.goals_ == b.goals_ &&
               a.horizon_ == b.horizon_ && a.feature_map_ == b.feature_map_;
    }

private:
    void build();

    int width_ = 1;
    int height_ = 1;
    std::vector<Cell> obstacles_;
    Cell start_{};
    std::vector<Cell> goals_;
    int horizon_ = 1;
    FeatureMap feature_map_ = FeatureMap::bias_goal_dist;

    int feature_dim_ = 0;
    std::vector<bool> free_;
    std::vector<std::array<int, kNumActions>> successors_;
    std::vector<Eigen::VectorXd> features_;
    std::uint64_t fingerprint_ = 0;
};

/// A fixed-horizon state sequence. `actions`, when non-empty, records the
/// action taken at each step (length horizon) and disambiguates aliased moves.
struct Trajectory {
    std::vector<Cell> states;
    std::optional<std::string> agent_id;
    std::vector<int> actions;

    int horizon() const noexcept { return static_cast<int>(states.size()) - 1; }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Successors of the five actions in action order. Moves into walls or
/// obstacles stay in place, so the result always has five entries.
std::array<Cell, kNumActions> neighbors(Cell s, const GridSpec& spec);

/// phi(s) for the spec's feature map.
Eigen::VectorXd featurize(Cell s, const GridSpec& spec);

/// Number of actions leading from `from` to `to` (0 when not adjacent).
int transition_multiplicity(Cell from, Cell to, const GridSpec& spec);

/// Throws DomainError naming the offending step when `xi` is not a legal
/// trajectory of `spec` (wrong length, wrong start, illegal move, action
/// that does not produce the recorded successor).
void validate_trajectory(const Trajectory& xi, const GridSpec& spec);

/// Checks a prefix (length 1..horizon+1) of a trajectory.
void validate_prefix(const std::vector<Cell>& prefix, const GridSpec& spec);

/// One trajectory per action sequence of length horizon: exactly 5^T
/// entries, ordered lexicographically by action sequence. Aliased moves
/// produce repeated state sequences with distinct `actions`.
std::vector<Trajectory> enumerate_trajectories(const GridSpec& spec,
                                               std::uint64_t cap = kDefaultOracleCap);

}  // namespace bsdr
