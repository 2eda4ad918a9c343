#include "llmkey/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "llmkey/errors.hpp"

namespace llmkey {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr int kPowerIterations = 50;
constexpr int kMaxOuterSteps = 200;
constexpr int kSafeguardSteps = 50;
constexpr double kTiny = 1e-300;

void check_dims(const MatrixXd& a, const VectorXd& y) {
    if (a.rows() == 0 || a.cols() == 0) throw DimensionError("solver: empty matrix");
    if (a.rows() != y.size()) {
        throw DimensionError("solver: matrix has " + std::to_string(a.rows()) +
                             " rows but observation has length " + std::to_string(y.size()));
    }
}

bool small_change(double before, double after, double tol) {
    return std::abs(before - after) <= tol * std::max(std::abs(after), kTiny);
}

// The iterate moved by at most sqrt(tol) relative to its size. Paired with the
// objective test so a flat stretch of an accelerated run does not end it.
bool small_step(const VectorXd& before, const VectorXd& after, double tol) {
    return (after - before).norm() <= std::sqrt(tol) * std::max(1.0, after.norm());
}

// Minimizes 1/2 ||Ax - y||^2 + c^T x + lam ||x||_1 from x0 by monotone FISTA
// with the sufficient-decrease test on every step. `lipschitz` is the
// starting step estimate and may grow.
struct ProxGradOutcome {
    VectorXd x;
    double objective;
    int iters;
    bool converged;
};

ProxGradOutcome proximal_gradient(const MatrixXd& a, const VectorXd& y, const VectorXd* linear,
                                  double lam, VectorXd x0, double& lipschitz, int budget,
                                  double tol, std::vector<IterationRecord>* trace,
                                  int iter_offset) {
    auto smooth = [&](const VectorXd& x, const VectorXd& ax) {
        double f = 0.5 * (ax - y).squaredNorm();
        if (linear) f += linear->dot(x);
        return f;
    };

    VectorXd x = std::move(x0);
    VectorXd ax = a * x;
    double fx = smooth(x, ax) + lam * x.lpNorm<1>();
    VectorXd z = x;
    VectorXd az = ax;
    double t = 1.0;

    int k = 0;
    bool converged = false;
    while (k < budget) {
        ++k;
        VectorXd grad = a.transpose() * (az - y);
        if (linear) grad += *linear;
        const double fz = smooth(z, az);

        VectorXd u;
        VectorXd au;
        double fu = 0.0;
        for (;;) {
            u = soft_threshold(z - grad / lipschitz, lam / lipschitz);
            au = a * u;
            fu = smooth(u, au);
            const VectorXd du = u - z;
            const double model = fz + grad.dot(du) + 0.5 * lipschitz * du.squaredNorm();
            if (fu <= model + 1e-12 * std::max(1.0, std::abs(model))) break;
            lipschitz *= 2.0;
        }
        const double obj_u = fu + lam * u.lpNorm<1>();

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const bool accept = obj_u <= fx;
        const VectorXd x_prev = x;
        const double f_prev = fx;
        if (accept) {
            x = u;
            ax = au;
            fx = obj_u;
        }
        z = x + (t / t_next) * (u - x) + ((t - 1.0) / t_next) * (x - x_prev);
        az = a * z;
        t = t_next;

        if (trace) trace->push_back({iter_offset + k, fx, 1.0 / lipschitz});
        if (accept && (fx == 0.0 || (small_change(f_prev, fx, tol) &&
                                     small_step(x_prev, x, tol)))) {
            converged = true;
            break;
        }
    }
    return {std::move(x), fx, k, converged};
}

}  // namespace

void SolverConfig::validate() const {
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
        throw ConfigError("lambda must be a nonnegative number or auto");
    }
}

VectorXd soft_threshold(const VectorXd& v, double t) {
    if (t < 0.0) throw ParameterError("soft threshold must be nonnegative");
    return v.unaryExpr([t](double x) {
        const double mag = std::max(std::abs(x) - t, 0.0);
        return x < 0.0 ? -mag : (x > 0.0 ? mag : 0.0);
    });
}

double lasso_objective(const MatrixXd& a, const VectorXd& y, const VectorXd& x, double lambda) {
    return 0.5 * (a * x - y).squaredNorm() + lambda * x.lpNorm<1>();
}

double tls_objective(const MatrixXd& a, const VectorXd& y, const VectorXd& x, double lambda) {
    return (a * x - y).squaredNorm() / (1.0 + x.squaredNorm()) + lambda * x.lpNorm<1>();
}

double estimate_lipschitz(const MatrixXd& a) {
    VectorXd v = VectorXd::Constant(a.cols(), 1.0 / std::sqrt(static_cast<double>(a.cols())));
    double estimate = 0.0;
    for (int i = 0; i < kPowerIterations; ++i) {
        VectorXd w = a.transpose() * (a * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        estimate = v.dot(w);
        v = w / norm;
    }
    return std::max(estimate, (a * v).squaredNorm());
}

double resolve_lambda(const MatrixXd& a, const VectorXd& y, const SolverConfig& cfg) {
    if (cfg.lambda) return *cfg.lambda;
    const double base = 0.01 * (a.transpose() * y).lpNorm<Eigen::Infinity>();
    if (cfg.mode == SolverMode::Lasso) return base;
    return base * 2.0 / (1.0 + y.squaredNorm());
}

namespace {

double initial_lipschitz(const MatrixXd& a, StepRule rule) {
    if (rule == StepRule::Backtracking) return 1.0;
    const double l = estimate_lipschitz(a);
    return l > 0.0 ? l : 1.0;
}

}  // namespace

SolveResult solve_lasso(const MatrixXd& a, const VectorXd& y, const SolverConfig& cfg) {
    cfg.validate();
    check_dims(a, y);

    SolveResult result;
    result.lambda = resolve_lambda(a, y, cfg);
    double lipschitz = initial_lipschitz(a, cfg.step_rule);
    auto out = proximal_gradient(a, y, nullptr, result.lambda, VectorXd::Zero(a.cols()), lipschitz,
                                 cfg.max_iters, cfg.tol,
                                 cfg.record_trace ? &result.trace : nullptr, 0);
    result.x = std::move(out.x);
    result.objective = out.objective;
    result.iters = out.iters;
    result.converged = out.converged;
    return result;
}

SolveResult solve_l1_tls(const MatrixXd& a, const VectorXd& y, const SolverConfig& cfg) {
    cfg.validate();
    check_dims(a, y);

    SolveResult result;
    const double lambda = resolve_lambda(a, y, cfg);
    result.lambda = lambda;

    VectorXd x = VectorXd::Zero(a.cols());
    double g = tls_objective(a, y, x, lambda);
    double lipschitz = initial_lipschitz(a, cfg.step_rule);
    int used = 0;
    auto* trace = cfg.record_trace ? &result.trace : nullptr;

    for (int outer = 0; outer < kMaxOuterSteps && used < cfg.max_iters; ++outer) {
        if (g == 0.0) {
            result.converged = true;
            break;
        }
        const double p = 1.0 + x.squaredNorm();
        const double c = (a * x - y).squaredNorm() / p;
        // Scaled by p/2:  1/2 ||Ax - y||^2 - c x_t^T x + (lambda p / 2) ||x||_1
        const VectorXd linear = -c * x;
        auto inner = proximal_gradient(a, y, &linear, 0.5 * lambda * p, x, lipschitz,
                                       cfg.max_iters - used, cfg.tol, nullptr, used);
        used += inner.iters;
        VectorXd candidate = std::move(inner.x);
        double g_candidate = tls_objective(a, y, candidate, lambda);

        if (!(g_candidate <= g)) {
            // Backtracking proximal gradient directly on the ratio objective.
            candidate = x;
            g_candidate = g;
            double step = 1.0 / lipschitz;
            for (int s = 0; s < kSafeguardSteps && used < cfg.max_iters; ++s) {
                ++used;
                const double pc = 1.0 + candidate.squaredNorm();
                const VectorXd r = a * candidate - y;
                const VectorXd grad =
                    (2.0 / pc) * (a.transpose() * r) - (2.0 * r.squaredNorm() / (pc * pc)) * candidate;
                bool moved = false;
                for (int bt = 0; bt < 60; ++bt) {
                    const VectorXd u = soft_threshold(candidate - step * grad, step * lambda);
                    const double gu = tls_objective(a, y, u, lambda);
                    if (gu <= g_candidate - 0.5 / step * (u - candidate).squaredNorm()) {
                        moved = !(u == candidate);
                        candidate = u;
                        g_candidate = gu;
                        break;
                    }
                    step *= 0.5;
                }
                if (!moved) break;
            }
        }

        const double before = g;
        x = std::move(candidate);
        g = g_candidate;
        if (trace) trace->push_back({used, g, 1.0 / lipschitz});
        if (small_change(before, g, cfg.tol)) {
            result.converged = true;
            break;
        }
    }

    result.x = std::move(x);
    result.objective = g;
    result.iters = used;
    return result;
}

SolveResult solve(const MatrixXd& a, const VectorXd& y, const SolverConfig& cfg) {
    return cfg.mode == SolverMode::Lasso ? solve_lasso(a, y, cfg) : solve_l1_tls(a, y, cfg);
}

KeyBits round_to_bits(const VectorXd& x) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) bits[static_cast<std::size_t>(i)] = x[i] >= 0.5 ? 1 : 0;
    return KeyBits(std::move(bits));
}

std::vector<int> round_to_trits(const VectorXd& x) {
    std::vector<int> out(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        // std::round breaks ties away from zero.
        const double r = std::round(x[i]);
        out[static_cast<std::size_t>(i)] = r >= 1.0 ? 1 : (r <= -1.0 ? -1 : 0);
    }
    return out;
}

void write_iteration_trace(std::ostream& out, const std::vector<IterationRecord>& trace) {
    out << "iteration,objective,step\n";
    const auto old = out.precision(17);
    for (const auto& r : trace) out << r.iteration << ',' << r.objective << ',' << r.step << '\n';
    out.precision(old);
}

}  // namespace llmkey
