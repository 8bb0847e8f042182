#pragma once

#include <optional>
#include <vector>

#include "irsopt/complex_linalg.hpp"

namespace irsopt {

// One convex quadratic constraint: 0.5 x^T Q x + b^T x + d <= 0.
// Q must be symmetric PSD; a 0x0 Q means the constraint is affine.
struct QuadConstraint {
    RealMatrix q;
    rvec b;
    double d = 0.0;
};

// minimize 0.5 x^T P x + c^T x subject to quadratic constraints and box bounds.
// Infinite bounds mark coordinates as unbounded on that side.
struct ConvexQcqp {
    std::size_t n = 0;
    RealMatrix p;  // 0x0 means a purely linear objective
    rvec c;
    std::vector<QuadConstraint> constraints;
    rvec lower;  // may be empty (all -inf)
    rvec upper;  // may be empty (all +inf)
};

enum class QcqpStatus { Optimal, Infeasible, IterationLimit };

struct QcqpSolution {
    rvec x;
    double objective = 0.0;
    QcqpStatus status = QcqpStatus::IterationLimit;
    double kkt_residual = 0.0;
    // Lagrange multiplier estimates from the final barrier stage.
    rvec constraint_duals;
    rvec lower_duals;
    rvec upper_duals;
    // Strict feasibility was only achievable up to the boundary band; the
    // solution sits on (or within 1e-7 of) the constraint boundary.
    bool boundary_start = false;
    int newton_steps = 0;
};

struct QcqpConfig {
    double tol = 1e-8;          // target duality-gap estimate (m * mu)
    double mu0 = 1.0;           // initial barrier weight
    double mu_shrink = 0.1;     // per-stage barrier reduction
    double armijo_slope = 0.25;
    double backtrack = 0.5;
    int max_newton = 6000;      // total Newton-step budget
    int max_stage_iters = 60;   // Newton steps per barrier stage
};

struct Phase1Result {
    rvec x0;
    double max_violation = 0.0;  // optimal single-slack value
    bool strictly_feasible = false;
    bool boundary = false;  // slack landed in (-1e-9, 1e-7]
    int newton_steps = 0;
};

// Throws invalid_input on dimension mismatches, non-finite data, or quadratic
// terms whose minimum eigenvalue falls below -1e-9 times their Frobenius norm.
void qcqp_validate(const ConvexQcqp& prob);

double qcqp_objective(const ConvexQcqp& prob, const rvec& x);
double qcqp_constraint_value(const ConvexQcqp& prob, std::size_t i, const rvec& x);
double qcqp_max_violation(const ConvexQcqp& prob, const rvec& x);

// Minimize a single slack bounding all constraint values; used to find a
// strictly feasible start and to detect infeasibility.
Phase1Result qcqp_phase1(const ConvexQcqp& prob, const QcqpConfig& cfg = {});

// Log-barrier interior-point solve. A strictly feasible x0 skips phase 1.
QcqpSolution qcqp_solve(const ConvexQcqp& prob, const QcqpConfig& cfg = {},
                        const std::optional<rvec>& x0 = std::nullopt);

}  // namespace irsopt
