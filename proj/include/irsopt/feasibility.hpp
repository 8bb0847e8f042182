#pragma once

#include <cstdint>
#include <vector>

#include "irsopt/channel.hpp"
#include "irsopt/phase_engines.hpp"
#include "irsopt/qcqp.hpp"

namespace irsopt {

struct FeasibilityConfig {
    PhaseEngineConfig engine;  // phase-block solver
    QcqpConfig qcqp;           // power-block solver
    double alpha_tol = 1e-6;   // outer |delta alpha| threshold
    int alpha_hits = 3;        // consecutive near-flat outer iterations to stop
    int max_outer = 200;
    std::uint64_t rng_seed = 1;  // initial (phi, q) draw
};

// Outcome of the alternating feasibility search. feasible = true certifies the
// returned operating point: alpha <= 1 + 1e-9 and every user's optimal-receiver
// SINR meets its target within relative 1e-6. feasible = false is inconclusive
// (the search is a sufficient test only).
struct FeasibilityReport {
    bool feasible = false;
    double alpha = 0.0;  // max_k (1 + r_k) * mse_k at the returned point
    PhaseVector phi;
    PowerVector q;
    std::vector<cvec> receivers;
    int outer_iterations = 0;
    std::vector<double> alpha_trace;  // one value per outer iteration
    int qcqp_solves = 0;              // power blocks plus engine subproblems
};

// Power block: minimize alpha over (p_1..p_K, alpha) with p_k = sqrt(q_k) in
// [0, sqrt(P_k)]; constraint k bounds (1 + r_k) * mse_k(p.^2) - alpha.
ConvexQcqp assemble_p6(const ChannelSet& ch, const PhaseVector& phi,
                       const std::vector<cvec>& receivers, const std::vector<double>& rates,
                       const std::vector<double>& p_max_mw);

// Phase block: constraint k evaluates, for any phi, to
// (1 + r_k) * mse_k(phi) - alpha; one aux variable (alpha), objective min alpha.
PhaseProblem assemble_p8(const ChannelSet& ch, const PowerVector& q,
                         const std::vector<cvec>& receivers, const std::vector<double>& rates);

// Alternating search over receivers, powers, and phases for an operating point
// meeting every SINR target within the per-user power budgets. Always returns
// a report; throws invalid_input only on malformed inputs.
FeasibilityReport check_feasibility(const ChannelSet& ch, const std::vector<double>& rates,
                                    const std::vector<double>& p_max_mw,
                                    const FeasibilityConfig& cfg = {});

}  // namespace irsopt
