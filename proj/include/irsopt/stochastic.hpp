#pragma once

#include <cstdint>
#include <vector>

#include "irsopt/channel.hpp"
#include "irsopt/complex_linalg.hpp"
#include "irsopt/phase_engines.hpp"

namespace irsopt {

enum class CsiMode {
    RayleighUnbiased,        // fresh zero-mean draws each slot; base supplies only variances
    GaussianTruthPlusError,  // base channels plus zero-mean Gaussian estimation error
};

// Per-slot channel estimate source. `base` fixes the dimensions, the reflector
// line-of-sight link (taken as perfectly known), and the noise power; in the
// truth-plus-error mode it is also the fixed truth channel. Empty variance
// vectors default to the per-user mean entry power of the base columns.
struct CsiSampler {
    CsiMode mode = CsiMode::GaussianTruthPlusError;
    ChannelSet base;
    std::vector<double> sigma2_reflect;  // per-user entry variance, user-reflector link
    std::vector<double> sigma2_direct;   // per-user entry variance, user-AP link
    double eta = 0.5;  // share of the variance carried by the truth; error variance is (1-eta)*sigma2
    std::uint64_t rng_seed = 1;
};

// Fill defaulted variances and validate; returns the expanded sampler.
CsiSampler resolved(const CsiSampler& sampler);

// Channel estimate for slot t; deterministic in (rng_seed, t).
ChannelSet draw_csi(const CsiSampler& sampler, std::uint64_t t);

// One quadratic model in (phi, q):
//   value = constant + 2 Re{lin_phi^H phi} + lin_q^T q
//           + quad_phi ||phi||^2 + quad_q ||q||^2
struct SurrogateQuad {
    double constant = 0.0;
    cvec lin_phi;
    rvec lin_q;
    double quad_phi = 0.0;
    double quad_q = 0.0;
};

double surrogate_value(const SurrogateQuad& s, const cvec& phi, const rvec& q);

// Recursively averaged models of the per-user detection ratios and of the
// proximal weighted-power objective, plus the iterate they are centered on.
struct SurrogateState {
    int t = 0;  // slots absorbed so far
    std::vector<SurrogateQuad> ratio;
    SurrogateQuad objective;
    PhaseVector phi;
    PowerVector q;
};

// Fresh state: zero-initialized models centered on (phi0, q0).
SurrogateState make_surrogate_state(const PhaseVector& phi0, const PowerVector& q0);

// Gradient of user k's optimal-receiver detection ratio at (phi, q):
// grad_phi follows the convention d(ratio) = 2 Re{grad_phi^H d(phi)}.
struct SinrGradient {
    cvec grad_phi;
    rvec grad_q;
};

SinrGradient sinr_gradients(const ChannelSet& ch_hat, const PhaseVector& phi,
                            const PowerVector& q, int k);

struct StochasticConfig {
    PhaseEngineConfig engine;   // per-slot subproblem solver
    double tau = 1e-2;          // proximal weight in the ratio models
    double tau0 = 1e-2;         // proximal weight in the objective model
    double rho_scale = 3.0;     // averaging rate: min(1, rho_scale / (t+1)^rho_exponent)
    double rho_exponent = 0.9;
    double eps0 = 1e-3;         // iterate-change stopping threshold
    int max_slots = 500;
    double start_fraction = 0.9;      // initial powers as a fraction of the budgets
    std::uint64_t rng_seed = 1;       // initial phases
    int validation_samples = 0;       // per-slot held-out batch size; 0 disables
};

double learning_rate(int t, const StochasticConfig& cfg);

// Absorb one channel estimate: blend the models toward the proximal
// linearization of the ratios (and of the weighted power) at the current
// iterate, then advance the slot count.
void surrogate_update(SurrogateState& state, const ChannelSet& ch_hat,
                      const std::vector<double>& weights, const StochasticConfig& cfg);

// Result of one per-slot subproblem: beta is the largest model shortfall
// max_k(rates_k - ratio_k) at the returned point.
struct SurrogateSolve {
    double beta = 0.0;
    PhaseVector phi;
    PowerVector q;
    EngineStatus status = EngineStatus::NonConverged;
    int qcqp_solves = 0;
};

// Feasibility pass: minimize the common shortfall bound over unit-modulus
// phases and boxed powers.
SurrogateSolve solve_p19(const SurrogateState& state, const std::vector<double>& rates,
                         const std::vector<double>& p_max_mw,
                         const PhaseEngineConfig& engine = {});

// Minimization pass: minimize the objective model subject to every ratio
// model reaching its target; warm starts from a prior solve when given.
SurrogateSolve solve_p20(const SurrogateState& state, const std::vector<double>& rates,
                         const std::vector<double>& p_max_mw,
                         const PhaseEngineConfig& engine = {},
                         const SurrogateSolve* warm = nullptr);

// Blend the iterate toward (q_tilde, phi_tilde): powers average linearly,
// phases average their angles along the shorter arc, staying unit-modulus.
void smooth_update(SurrogateState& state, const PowerVector& q_tilde, const PhaseVector& phi_tilde,
                   double rho);

struct OnlineSlot {
    double beta = 0.0;        // feasibility-pass shortfall at its solution
    bool power_step = false;  // minimization pass ran this slot
    double model_violation = 0.0;  // ratio-model shortfall at the accepted pass solution
    double weighted_power = 0.0;   // weights^T q after smoothing, mW
    double iterate_change = 0.0;   // ||d phi||_2 + ||d q||_2 after smoothing
    std::vector<double> validation_sinr;  // held-out per-user averages; empty when disabled
};

struct OnlineTrace {
    std::vector<OnlineSlot> slots;
    PhaseVector phi;
    PowerVector q;
    double weighted_power = 0.0;
    bool converged = false;  // iterate change reached eps0 within the slot budget
    int qcqp_solves = 0;
};

// Online loop: per slot draw an estimate, refresh the models, run the
// feasibility pass, run the minimization pass when the models are met, then
// smooth. Stops at the iterate-change threshold or the slot budget.
OnlineTrace run_online(const CsiSampler& sampler, const std::vector<double>& rates,
                       const std::vector<double>& p_max_mw, const std::vector<double>& weights,
                       const StochasticConfig& cfg = {});

// Per-user optimal-receiver detection ratios averaged over fresh held-out
// draws (receivers recomputed per draw); disjoint from the online stream.
std::vector<double> validate_sinr(const CsiSampler& sampler, const PhaseVector& phi,
                                  const PowerVector& q, int samples);

}  // namespace irsopt
