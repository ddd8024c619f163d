#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bsdr/dataset.hpp"
#include "bsdr/model.hpp"

namespace bsdr {

// ---------------------------------------------------------------------------
// Priors

struct Prior {
    enum class Kind { uniform_grid, unit_sphere_uniform, gaussian };

    Kind kind = Kind::uniform_grid;
    /// Standard deviation of the isotropic Gaussian on theta_r.
    double sigma = 10.0;

    static Prior uniform_grid() { return {Kind::uniform_grid, 10.0}; }
    static Prior unit_sphere_uniform() { return {Kind::unit_sphere_uniform, 10.0}; }
    static Prior gaussian(double sigma);

    /// Unnormalized log density. gaussian acts on theta_r only;
    /// unit_sphere_uniform is 0 when theta_r and every theta_b have unit norm
    /// (to 1e-9) and -inf otherwise.
    double log_density(const JointParams& params) const;
    /// Gradient of log_density with respect to theta_r (zero unless gaussian).
    Eigen::VectorXd grad_theta_r(const Eigen::VectorXd& theta_r) const;
};

std::string to_string(Prior::Kind kind);
Prior::Kind prior_kind_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Likelihood

/// sum_i sum_j log P(xi^i_j | theta_r, theta_b^i). `params` must carry
/// exactly the dataset's agents (DomainError otherwise). One soft backup is
/// built per agent.
double dataset_log_likelihood(const Dataset& data, const JointParams& params);

/// Same quantity from cached per-agent feature counts:
/// sum_i (-theta_b^i^T Phi^i theta_r - n_i log Z_i).
double dataset_log_likelihood(const DatasetSummary& summary, const GridSpec& spec,
                              const JointParams& params);

// ---------------------------------------------------------------------------
// Grid posterior

/// One scalar parameter coordinate: theta_r[index], or theta_b[index] of `agent`.
struct Coordinate {
    enum class Block { reward, rationality };

    Block block = Block::reward;
    std::string agent;
    int index = 0;

    std::string label() const;
    friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

struct GridAxis {
    Coordinate coord;
    std::vector<double> values;
};

struct GridOptions {
    std::size_t max_points = 1'000'000;
    int threads = 1;
    /// Give zero prior mass to points where beta(s) < 0 for some free cell.
    bool nonnegative_beta = false;
};

/// Normalized log posterior over the Cartesian product of the axes,
/// flattened row-major (the last axis varies fastest), so flat index order
/// equals lexicographic order of the per-axis indices.
class PosteriorGrid {
public:
    PosteriorGrid(std::vector<GridAxis> axes, std::vector<double> log_post, double log_evidence,
                  int feature_dim);

    const std::vector<GridAxis>& axes() const noexcept { return axes_; }
    const std::vector<double>& log_post() const noexcept { return log_post_; }
    /// log of the normalizer sum_g exp(log lik + log prior).
    double log_evidence() const noexcept { return log_evidence_; }
    std::size_t size() const noexcept { return log_post_.size(); }

    std::vector<std::size_t> unravel(std::size_t flat) const;
    JointParams point(std::size_t flat) const;

    /// Highest-posterior point; exact ties go to the smallest flat index.
    std::size_t map_index() const;
    /// Posterior marginal over the values of one axis.
    std::vector<double> marginal(std::size_t axis) const;
    /// Posterior mass of the points gauge-equivalent to `truth`.
    double gauge_class_mass(const JointParams& truth, double rtol = 1e-9) const;
    /// Total probability mass (1 up to rounding).
    double total_mass() const;

private:
    std::vector<GridAxis> axes_;
    std::vector<double> log_post_;
    double log_evidence_;
    int feature_dim_;
};

/// True when b = (a.theta_r / c, c * a.theta_b^i) for some c > 0, tested via
/// equality of every outer product theta_r theta_b^i^T and positive
/// alignment of the theta_b's.
bool same_gauge_class(const JointParams& a, const JointParams& b, double rtol = 1e-9);

/// Every theta_r coordinate and, for each agent present in the axes, every
/// theta_b coordinate needs an axis. The dataset's agents must be among the
/// grid's agents; grid agents without data contribute no likelihood.
PosteriorGrid grid_posterior(const Dataset& data, std::vector<GridAxis> axes, const Prior& prior,
                             const GridOptions& options = {});

// ---------------------------------------------------------------------------
// Gradient MLE (objective includes log Z)

struct MleConfig {
    double step_size = 1.0;
    int max_iterations = 5000;
    /// Stop when the gauge-projected gradient norm falls below this.
    double tolerance = 1e-6;
    /// Also stop when the objective decreased by less than this fraction of
    /// max(1, |objective|) over the last 10 iterations; 0 disables.
    double objective_tolerance = 1e-8;
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 60;
    /// Number of curvature pairs for L-BFGS directions; 0 gives plain
    /// gradient descent.
    int lbfgs_memory = 10;
    /// Restrict each theta_b to the bias direction [beta, 0, ...]
    /// (per-agent Boltzmann rationality).
    bool bias_only_rationality = false;
    bool nonnegative_beta = false;
    /// Starting point; defaults to theta_r = 0, theta_b^i = [1, 0, ...].
    std::optional<JointParams> init;
};

struct ObjectiveEval {
    double value = 0.0;
    JointParams gradient;
};

/// Negative log posterior sum_i (theta_b^i^T Phi^i theta_r + n_i log Z_i)
/// - log P(theta) and its gradient.
ObjectiveEval mle_objective(const DatasetSummary& summary, const GridSpec& spec,
                            const JointParams& params, const Prior& prior);

struct MleDiagnostics {
    std::vector<double> objective_trace;
    std::vector<double> gradient_norm_trace;
    double gradient_norm = 0.0;
    int iterations = 0;
    /// Either stopping tolerance was met; stop_reason says which.
    bool converged = false;
    /// gradient_tolerance, objective_tolerance, iteration_cap or line_search.
    std::string stop_reason;
    /// Set when max_iterations was reached; params are the best found.
    bool hit_iteration_cap = false;
    /// Set when the line search could not make progress.
    bool line_search_stalled = false;
};

struct MleResult {
    JointParams params;
    MleDiagnostics diagnostics;
};

/// Gauge fix used by mle_fit: rescales so the root-mean-square of the
/// ||theta_b^i|| is 1 and divides theta_r by the same factor. With a
/// single agent this is ||theta_b|| = 1.
JointParams gauge_normalize(const JointParams& params);

/// Descent on the gauge-projected gradient (L-BFGS directions, Armijo
/// backtracking); after every step the iterate is gauge-normalized. Throws
/// DivergedError on a non-finite objective.
MleResult mle_fit(const Dataset& data, const Prior& prior = Prior::gaussian(10.0),
                  const MleConfig& config = {});

// ---------------------------------------------------------------------------
// Z-free heuristic (omits log Z; a baseline, not a consistent estimator)

struct AppendixConfig {
    /// Ascent step, relative to the spectral scale of sum_i Phi^i.
    double step_size = 1.0;
    int max_iterations = 5000;
    /// Absolute Lagrange residual at which an agent counts as stationary.
    double tolerance = 1e-10;
    /// Initial theta_b per agent (normalized); defaults to [1, 0, ...].
    std::map<std::string, Eigen::VectorXd> init;
};

struct AppendixResult {
    JointParams params;
    std::vector<double> objective_trace;  ///< ||sum_i Phi^i theta_b^i||^2
    std::map<std::string, double> lagrange_residuals;
    int iterations = 0;
    bool converged = false;
};

/// Maximizes ||sum_i Phi^i theta_b^i||^2 over unit theta_b^i by projected
/// gradient ascent, then sets theta_r = -v / ||v|| with v = sum_i Phi^i
/// theta_b^i. Throws DegenerateSolutionError when v vanishes.
AppendixResult appendix_heuristic_fit(const std::map<std::string, Eigen::MatrixXd>& phi_by_agent,
                                      const AppendixConfig& config = {});
AppendixResult appendix_heuristic_fit(const Dataset& data, const AppendixConfig& config = {});

/// Closed-form theta_r = -v / ||v||.
Eigen::VectorXd appendix_theta_r(const std::map<std::string, Eigen::MatrixXd>& phi_by_agent,
                                 const std::map<std::string, Eigen::VectorXd>& theta_b);

/// Per agent, min over lambda of ||2 Phi^i^T v + 2 lambda theta_b^i||.
std::map<std::string, double> lagrange_residual(const JointParams& params,
                                                const std::map<std::string, Eigen::MatrixXd>& phi_by_agent);
std::map<std::string, double> lagrange_residual(const JointParams& params, const Dataset& data);

std::map<std::string, Eigen::MatrixXd> phi_by_agent(const Dataset& data);

// ---------------------------------------------------------------------------
// Goal inference

/// Log-probability of one action prefix producing s_0..s_k, marginalizing
/// all completions: the prefix score plus log_suffix(k, s_k) minus log Z.
/// Aliased moves contribute one such term per action prefix; goal variants of
/// a layout share those multiplicities, so they cancel in goal_posterior.
/// Throws DomainError on an inconsistent prefix.
double prefix_log_likelihood(std::span<const Cell> prefix, const BsdrParams& params,
                             const GridSpec& spec, const SoftBackup& backup);

/// P(goal | prefix) over goal variants of one layout. `prior` may be empty
/// (uniform) or hold one weight per candidate.
std::vector<double> goal_posterior(std::span<const Cell> prefix, const std::vector<GridSpec>& goal_specs,
                                   const Eigen::VectorXd& theta_b, const Eigen::VectorXd& theta_r,
                                   std::span<const double> prior = {});

// ---------------------------------------------------------------------------
// Diagnostics serialization

nlohmann::json to_json(const JointParams& params);
nlohmann::json to_json(const MleDiagnostics& diag);
nlohmann::json to_json(const AppendixResult& result);

}  // namespace bsdr
