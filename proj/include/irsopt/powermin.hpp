#pragma once

#include <vector>

#include "irsopt/channel.hpp"
#include "irsopt/feasibility.hpp"
#include "irsopt/phase_engines.hpp"
#include "irsopt/qcqp.hpp"

namespace irsopt {

struct PowerMinConfig {
    PhaseEngineConfig engine;     // phase-block solver
    QcqpConfig qcqp;              // power-block solver
    FeasibilityConfig bootstrap;  // initial search; its engine/qcqp are overridden by the above
    double power_tol = 1e-6;      // relative weighted-power improvement threshold
    int power_hits = 3;           // consecutive near-flat outer iterations to stop
    int max_outer = 300;
};

// Outcome of the alternating power descent. The returned (phi, q) meets every
// target within relative 1e-6 under optimal receivers and stays inside the
// per-user budgets; weighted_power is weights^T q in mW.
struct PowerMinReport {
    PhaseVector phi;
    PowerVector q;
    double weighted_power = 0.0;
    std::vector<double> beta_trace;   // phase-block margin, one value per outer iteration
    std::vector<double> power_trace;  // starting value, then one value per outer iteration
    int outer_iterations = 0;
    int qcqp_solves = 0;  // power blocks plus engine subproblems, bootstrap included
};

// Receiver surrogates y_k = sqrt(q_k) W_k^{-1} h_k with W_k the covariance of
// noise plus interference (user k's own signal excluded).
std::vector<cvec> y_update(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q);

// Concave lower bound on user k's optimal-receiver SINR induced by ys; tight
// exactly when ys comes from y_update at the same (phi, q).
double transform_value(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q,
                       const std::vector<cvec>& ys, int k);

// Power block: minimize sum_k weights_k p_k^2 over p_k = sqrt(q_k) in
// [0, sqrt(P_k)]; constraint k requires the transform bound at q = p.^2 to
// reach rates_k. Constraints that vanish identically (y_k = 0 and zero rate)
// are omitted.
ConvexQcqp assemble_p13(const ChannelSet& ch, const PhaseVector& phi,
                        const std::vector<cvec>& ys, const std::vector<double>& weights,
                        const std::vector<double>& rates, const std::vector<double>& p_max_mw);

// Phase block: constraint k evaluates, for any phi, to rates_k minus the
// transform bound there, shifted by one aux variable (beta); objective is to
// minimize beta, pushing the iterate away from the constraint boundaries.
// Constraints that vanish identically are omitted.
PhaseProblem assemble_p14(const ChannelSet& ch, const PowerVector& q, const std::vector<cvec>& ys,
                          const std::vector<double>& rates);

// Alternating descent of the weighted sum power subject to the SINR targets,
// starting from a feasible point found by check_feasibility. Throws
// infeasible_error when that search cannot certify one.
PowerMinReport minimize_power(const ChannelSet& ch, const std::vector<double>& rates,
                              const std::vector<double>& p_max_mw,
                              const std::vector<double>& weights, const PowerMinConfig& cfg = {});

}  // namespace irsopt
