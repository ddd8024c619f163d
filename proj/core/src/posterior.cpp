#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bsdr/errors.hpp"
#include "bsdr/inference.hpp"
#include "bsdr/numeric.hpp"
#include "bsdr/parallel.hpp"

namespace bsdr {

namespace {

bool close_vectors(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rtol) {
    const double scale = std::max(x.norm(), y.norm());
    if (scale == 0.0) return true;
    return (x - y).norm() <= rtol * scale;
}

bool beta_nonnegative(const JointParams& p, const GridSpec& spec) {
    for (const auto& [_, b] : p.theta_b) {
        for (int s = 0; s < spec.num_cells(); ++s) {
            if (spec.is_free_index(s) && b.dot(spec.features(s)) < 0.0) return false;
        }
    }
    return true;
}

}  // namespace

std::string Coordinate::label() const {
    if (block == Block::reward) return "theta_r[" + std::to_string(index) + "]";
    return "theta_b[" + agent + "][" + std::to_string(index) + "]";
}

PosteriorGrid::PosteriorGrid(std::vector<GridAxis> axes, std::vector<double> log_post, double log_evidence,
                             int feature_dim)
    : axes_(std::move(axes)), log_post_(std::move(log_post)), log_evidence_(log_evidence),
      feature_dim_(feature_dim) {}

std::vector<std::size_t> PosteriorGrid::unravel(std::size_t flat) const {
    std::vector<std::size_t> idx(axes_.size(), 0);
    for (std::size_t k = axes_.size(); k-- > 0;) {
        const std::size_t n = axes_[k].values.size();
        idx[k] = flat % n;
        flat /= n;
    }
    return idx;
}

JointParams PosteriorGrid::point(std::size_t flat) const {
    JointParams p;
    p.theta_r = Eigen::VectorXd::Zero(feature_dim_);
    const auto idx = unravel(flat);
    for (std::size_t k = 0; k < axes_.size(); ++k) {
        const auto& c = axes_[k].coord;
        const double v = axes_[k].values[idx[k]];
        if (c.block == Coordinate::Block::reward) {
            p.theta_r[c.index] = v;
        } else {
            auto [it, _] = p.theta_b.try_emplace(c.agent, Eigen::VectorXd::Zero(feature_dim_));
            it->second[c.index] = v;
        }
    }
    return p;
}

std::size_t PosteriorGrid::map_index() const {
    std::size_t best = 0;
    for (std::size_t g = 1; g < log_post_.size(); ++g) {
        if (log_post_[g] > log_post_[best]) best = g;
    }
    return best;
}

std::vector<double> PosteriorGrid::marginal(std::size_t axis) const {
    if (axis >= axes_.size()) throw DomainError("axis index out of range");
    std::vector<double> out(axes_[axis].values.size(), 0.0);
    for (std::size_t g = 0; g < log_post_.size(); ++g) out[unravel(g)[axis]] += std::exp(log_post_[g]);
    return out;
}

double PosteriorGrid::gauge_class_mass(const JointParams& truth, double rtol) const {
    double mass = 0.0;
    for (std::size_t g = 0; g < log_post_.size(); ++g) {
        if (log_post_[g] == kNegInf) continue;
        if (same_gauge_class(truth, point(g), rtol)) mass += std::exp(log_post_[g]);
    }
    return mass;
}

double PosteriorGrid::total_mass() const {
    double mass = 0.0;
    for (double lp : log_post_) mass += std::exp(lp);
    return mass;
}

bool same_gauge_class(const JointParams& a, const JointParams& b, double rtol) {
    if (a.theta_r.size() != b.theta_r.size() || a.theta_b.size() != b.theta_b.size()) return false;
    for (const auto& [id, _] : a.theta_b) {
        if (!b.theta_b.contains(id)) return false;
    }
    // c = b.theta_b / a.theta_b read off the largest rationality entry of a,
    // or from theta_r when every theta_b of a vanishes.
    double c = std::numeric_limits<double>::quiet_NaN();
    double largest = 0.0;
    for (const auto& [id, ab] : a.theta_b) {
        Eigen::Index k = 0;
        const double m = ab.cwiseAbs().maxCoeff(&k);
        if (m > largest) {
            largest = m;
            c = b.theta_b.at(id)[k] / ab[k];
        }
    }
    if (largest == 0.0) {
        Eigen::Index k = 0;
        if (b.theta_r.size() == 0 || b.theta_r.cwiseAbs().maxCoeff(&k) == 0.0) {
            return a.theta_r.isZero(0.0) && b.theta_r.isZero(0.0) &&
                   std::all_of(b.theta_b.begin(), b.theta_b.end(),
                               [](const auto& kv) { return kv.second.isZero(0.0); });
        }
        c = a.theta_r[k] / b.theta_r[k];
    }
    if (!(c > 0.0) || !std::isfinite(c)) return false;
    if (!close_vectors(b.theta_r, a.theta_r / c, rtol)) return false;
    for (const auto& [id, ab] : a.theta_b) {
        if (!close_vectors(b.theta_b.at(id), c * ab, rtol)) return false;
    }
    return true;
}

PosteriorGrid grid_posterior(const Dataset& data, std::vector<GridAxis> axes, const Prior& prior,
                             const GridOptions& options) {
    const GridSpec& spec = data.spec;
    const int dim = spec.feature_dim();
    if (axes.empty()) throw DomainError("grid has no axes");

    std::set<std::pair<std::string, int>> seen;
    std::map<std::string, std::set<int>> rationality;
    std::set<int> reward;
    for (const auto& ax : axes) {
        if (ax.values.empty()) throw DomainError("grid axis " + ax.coord.label() + " is empty");
        if (ax.coord.index < 0 || ax.coord.index >= dim) {
            throw DomainError("grid axis " + ax.coord.label() + " is outside feature dimension " +
                              std::to_string(dim));
        }
        const bool rew = ax.coord.block == Coordinate::Block::reward;
        const std::string key = rew ? std::string() : "b:" + ax.coord.agent;
        if (!seen.emplace(rew ? "r" : key, ax.coord.index).second) {
            throw DomainError("duplicate grid axis " + ax.coord.label());
        }
        if (rew) {
            reward.insert(ax.coord.index);
        } else {
            rationality[ax.coord.agent].insert(ax.coord.index);
        }
    }
    if (static_cast<int>(reward.size()) != dim) throw DomainError("grid must have an axis for every theta_r coordinate");
    for (const auto& [agent, idx] : rationality) {
        if (static_cast<int>(idx.size()) != dim) {
            throw DomainError("grid must have an axis for every theta_b coordinate of agent '" + agent + "'");
        }
    }
    for (const auto& id : data.agents()) {
        if (!rationality.contains(id)) throw DomainError("dataset agent '" + id + "' has no grid axes");
    }

    std::size_t total = 1;
    for (const auto& ax : axes) {
        if (total > options.max_points / ax.values.size()) {
            throw SizeError("grid exceeds the budget of " + std::to_string(options.max_points) + " points");
        }
        total *= ax.values.size();
    }

    const DatasetSummary summary = summarize(data);
    PosteriorGrid shape(axes, {}, 0.0, dim);
    std::vector<double> log_joint(total, kNegInf);
    parallel_for(total, options.threads, [&](std::size_t g) {
        const JointParams p = shape.point(g);
        double lp = prior.log_density(p);
        if (lp == kNegInf) return;
        if (options.nonnegative_beta && !beta_nonnegative(p, spec)) return;
        for (const auto& [id, s] : summary) {
            const BsdrParams bp = p.for_agent(id);
            const double log_z = log_partition(bp, spec).log_z();
            lp += -bp.theta_b.dot(s.phi.matrix * bp.theta_r) - s.count * log_z;
        }
        log_joint[g] = lp;
    });

    const double log_evidence = log_sum_exp(log_joint);
    if (!std::isfinite(log_evidence)) throw DomainError("prior assigns no mass to any grid point");
    for (double& v : log_joint) v -= log_evidence;
    return PosteriorGrid(std::move(axes), std::move(log_joint), log_evidence, dim);
}

}  // namespace bsdr
