#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "llmkey/key_bits.hpp"

namespace llmkey {

enum class SolverMode { Lasso, TlsReduced };
enum class StepRule { FixedLipschitz, Backtracking };

struct SolverConfig {
    /// Penalty weight; "auto" when unset (see resolve_lambda).
    std::optional<double> lambda;
    int max_iters = 20000;
    /// Relative objective change that ends a solve.
    double tol = 1e-10;
    SolverMode mode = SolverMode::TlsReduced;
    StepRule step_rule = StepRule::FixedLipschitz;
    /// Keep a per-iteration (iteration, objective, step) trace in the result.
    bool record_trace = false;

    /// Throws ConfigError.
    void validate() const;
};

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    double step = 0.0;
};

struct SolveResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    int iters = 0;
    bool converged = false;
    double lambda = 0.0;
    std::vector<IterationRecord> trace;
};

/// sign(v_i) * max(|v_i| - t, 0), elementwise.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t);

/// 1/2 ||Ax - y||^2 + lambda ||x||_1
double lasso_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& x, double lambda);

/// ||Ax - y||^2 / (1 + ||x||^2) + lambda ||x||_1
double tls_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& x, double lambda);

/// Largest eigenvalue of A^T A by 50 power iterations from a fixed start.
double estimate_lipschitz(const Eigen::MatrixXd& a);

/// The configured lambda, or the automatic choice for the mode:
/// 0.01 ||A^T y||_inf for Lasso; for TlsReduced the same quantity times
/// 2 / (1 + ||y||^2), which puts the effective per-step lasso penalty on the
/// same scale once the data term is divided by 1 + ||x||^2.
double resolve_lambda(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const SolverConfig& cfg);

/// Minimizes the lasso objective by monotone accelerated proximal gradient.
/// Non-convergence is reported through `converged`, not thrown.
SolveResult solve_lasso(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const SolverConfig& cfg);

/// Minimizes the reduced l1-regularized total-least-squares objective.
///
/// Each outer step fixes the weight 1 / (1 + ||x_t||^2), linearizes the
/// concave -c ||x||^2 part of the ratio at x_t, and solves the resulting
/// lasso warm-started at x_t. Fixed points are stationary points of the
/// objective. A step that fails to decrease it is replaced by backtracking
/// proximal-gradient steps on the objective itself.
SolveResult solve_l1_tls(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const SolverConfig& cfg);

/// Dispatches on cfg.mode.
SolveResult solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const SolverConfig& cfg);

/// 1 where x_i >= 0.5.
KeyBits round_to_bits(const Eigen::VectorXd& x);

/// Nearest integer clamped to {-1, 0, 1}; ties round away from zero.
std::vector<int> round_to_trits(const Eigen::VectorXd& x);

/// CSV with header `iteration,objective,step`.
void write_iteration_trace(std::ostream& out, const std::vector<IterationRecord>& trace);

}  // namespace llmkey
