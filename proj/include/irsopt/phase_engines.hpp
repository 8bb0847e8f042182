#pragma once

#include <cstddef>
#include <vector>

#include "irsopt/channel.hpp"
#include "irsopt/complex_linalg.hpp"

namespace irsopt {

// One constraint of a phase-vector feasibility/minimization problem, jointly
// convex in (phi, aux):
//   phi^H Q phi + 2 Re{q_lin^H phi} + 0.5 aux^T A aux + a_lin^T aux + d <= 0
struct PhaseConstraint {
    ComplexMatrix q;       // N x N Hermitian PSD; 0x0 when absent
    cvec q_lin;            // length N; empty when absent
    RealMatrix aux_quad;   // n_aux x n_aux PSD; 0x0 when absent
    rvec aux_lin;          // length n_aux; empty when absent
    double d = 0.0;
};

// Minimize 0.5 aux^T P aux + p_lin^T aux subject to the constraints above,
// aux box bounds, and unit-modulus phi. The engines relax the modulus
// constraint in different ways; aux never carries it.
struct PhaseProblem {
    std::size_t n_elements = 0;  // N
    std::size_t n_aux = 0;
    std::vector<PhaseConstraint> constraints;
    RealMatrix aux_obj_quad;  // 0x0 when absent
    rvec aux_obj_lin;         // empty when absent
    rvec aux_lower, aux_upper;  // empty = unbounded; +-inf entries allowed
};

void validate_phase_problem(const PhaseProblem& prob);
double phase_constraint_value(const PhaseProblem& prob, std::size_t i, const cvec& phi,
                              const rvec& aux);
double phase_objective(const PhaseProblem& prob, const rvec& aux);
// largest constraint value at (phi, aux); -inf when there are no constraints
double phase_max_constraint(const PhaseProblem& prob, const cvec& phi, const rvec& aux);

// Entrywise radial projection onto the unit circle; zero entries map to 1.
PhaseVector unit_circle_project(const cvec& v);

// Global minimizer of g(psi) = 2|psi|^2 - 2 Re{psi* s} - 2 t |psi|.
cplx scalar_prox(cplx s, double t);

struct PddConfig {
    double rho0 = 1.0;        // initial proximal weight (penalty is 1/rho)
    double c = 0.85;          // rho shrink factor when the split residual is large
    double eta0 = 0.1;        // dual-step gate schedule eta_k = eta0 * eta_decay^k
    double eta_decay = 0.8;
    double inner_tol = 1e-6;  // relative augmented-objective improvement
    double outer_tol = 1e-4;  // terminal ||phi - psi||_2
    int max_outer = 200;
    int max_inner = 50;
    bool include_disc_bound = true;  // keep |phi_n| <= 1 in the inner subproblem
};

struct NeAdmmConfig {
    double rho = 4.0;
    double tol = 1e-4;  // both split and modulus residuals must reach this
    int max_iter = 500;
};

enum class EngineStatus { Converged, NonConverged };

struct EngineTracePoint {
    int outer = 0;
    int inner = 0;
    double objective = 0.0;  // aux objective
    double al = 0.0;         // augmented objective the engine minimizes
    double res_split = 0.0;  // ||phi - psi||_inf (pdd) or ||psi - phi||_2 (admm)
    double res_modulus = 0.0;  // || |psi| - 1 ||_2 (neadmm only)
    double rho = 0.0;
    bool dual_step = false;
};

struct EngineDuals {
    rvec constraint_duals;           // one per PhaseProblem constraint
    rvec disc_duals;                 // per-element |phi_n|^2 <= 1 multipliers
    rvec aux_lower_duals, aux_upper_duals;
    cvec mu;                         // multiplier of the phi = psi split
};

struct EngineResult {
    PhaseVector phi;   // exactly unit modulus
    cvec phi_inner;    // last inner-block phi, possibly off the circle
    rvec aux;
    EngineStatus status = EngineStatus::NonConverged;
    double res_split = 0.0;
    double res_modulus = 0.0;
    int outer_iters = 0;
    int qcqp_solves = 0;
    EngineDuals duals;
    std::vector<EngineTracePoint> trace;
};

EngineResult pdd_solve(const PhaseProblem& prob, const PhaseVector& phi0, const rvec& aux0,
                       const PddConfig& cfg = {});
EngineResult neadmm_solve(const PhaseProblem& prob, const PhaseVector& phi0, const rvec& aux0,
                          const NeAdmmConfig& cfg = {});
EngineResult stdadmm_solve(const PhaseProblem& prob, const PhaseVector& phi0, const rvec& aux0,
                           const NeAdmmConfig& cfg = {});

enum class PhaseEngine { Pdd, NeAdmm, StdAdmm };

// Engine choice plus the parameters of whichever engine is selected.
struct PhaseEngineConfig {
    PhaseEngine kind = PhaseEngine::NeAdmm;
    PddConfig pdd;
    NeAdmmConfig admm;  // shared by the nonlinear and standard variants
};

EngineResult solve_phase_problem(const PhaseProblem& prob, const PhaseVector& phi0,
                                 const rvec& aux0, const PhaseEngineConfig& cfg);

// Worst deviation of (phi, psi, aux, duals) from the first-order optimality
// system of the unit-modulus problem: stationarity in phi and aux, radial
// alignment of mu at psi, primal violations including the split gap,
// complementary slackness, and dual sign violations.
double kkt_residual_p8(const cvec& phi, const cvec& psi, const rvec& aux,
                       const EngineDuals& duals, const PhaseProblem& prob);

}  // namespace irsopt
