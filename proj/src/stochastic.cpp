#include "irsopt/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irsopt/errors.hpp"

namespace irsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Held-out draws live far above any slot index so validation never reuses an
// online estimate; the standalone range is disjoint from the per-slot batches.
constexpr std::uint64_t kSlotValidationBase = std::uint64_t{1} << 32;
constexpr std::uint64_t kValidationBase = std::uint64_t{1} << 33;

void check_channels(const ChannelSet& ch) {
    const std::size_t k = ch.h_d.cols();
    const std::size_t m = ch.h_d.rows();
    const std::size_t n = ch.h_r.rows();
    if (k == 0 || m == 0 || n == 0) throw invalid_input("stochastic: empty channel set");
    if (ch.h_r.cols() != k) throw invalid_input("stochastic: h_r/h_d user count mismatch");
    if (ch.g.rows() != m || ch.g.cols() != n)
        throw invalid_input("stochastic: g dimensions inconsistent with h_r/h_d");
    require_finite(ch.g, "stochastic: g");
    require_finite(ch.h_r, "stochastic: h_r");
    require_finite(ch.h_d, "stochastic: h_d");
    if (!(ch.noise_power_mw > 0.0) || !std::isfinite(ch.noise_power_mw))
        throw invalid_input("stochastic: noise power must be positive");
}

void check_rates(const std::vector<double>& rates, std::size_t k) {
    if (rates.size() != k) throw invalid_input("stochastic: rates size mismatch");
    for (double r : rates)
        if (!std::isfinite(r) || r < 0.0)
            throw invalid_input("stochastic: rates must be finite and nonnegative");
}

void check_budgets(const std::vector<double>& p_max_mw, std::size_t k) {
    if (p_max_mw.size() != k) throw invalid_input("stochastic: power budget size mismatch");
    for (double p : p_max_mw)
        if (!std::isfinite(p) || p <= 0.0)
            throw invalid_input("stochastic: power budgets must be positive");
}

void check_weights(const std::vector<double>& weights, std::size_t k) {
    if (weights.size() != k) throw invalid_input("stochastic: weights size mismatch");
    for (double w : weights)
        if (!std::isfinite(w) || w < 0.0)
            throw invalid_input("stochastic: weights must be finite and nonnegative");
}

void check_powers(const PowerVector& q, std::size_t k) {
    if (q.q.size() != k) throw invalid_input("stochastic: power vector size mismatch");
    for (double v : q.q)
        if (!std::isfinite(v) || v < 0.0)
            throw invalid_input("stochastic: powers must be finite and nonnegative");
}

void check_state(const SurrogateState& state) {
    const std::size_t k = state.q.q.size();
    const std::size_t n = state.phi.phi.size();
    if (k == 0 || n == 0) throw invalid_input("stochastic: empty surrogate state");
    if (state.ratio.size() != k) throw invalid_input("stochastic: ratio model count mismatch");
    check_powers(state.q, k);
    if (!all_finite(state.phi.phi)) throw invalid_input("stochastic: phases must be finite");
    for (const auto& s : state.ratio) {
        if (s.lin_phi.size() != n || s.lin_q.size() != k)
            throw invalid_input("stochastic: ratio model dimensions mismatch");
        if (!all_finite(s.lin_phi) || !all_finite(s.lin_q) || !std::isfinite(s.constant) ||
            !std::isfinite(s.quad_phi) || !std::isfinite(s.quad_q))
            throw invalid_input("stochastic: ratio model has non-finite data");
    }
    if (state.objective.lin_q.size() != k)
        throw invalid_input("stochastic: objective model dimensions mismatch");
    if (state.t < 0) throw invalid_input("stochastic: negative slot count");
}

double sumsq(const rvec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double sumsq(const cvec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return s;
}

double mean_entry_power(const ComplexMatrix& m, std::size_t col) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += std::norm(m(r, col));
    return s / static_cast<double>(m.rows());
}

SurrogateQuad zero_quad(std::size_t n, std::size_t k) {
    SurrogateQuad s;
    s.lin_phi.assign(n, cplx{0.0, 0.0});
    s.lin_q.assign(k, 0.0);
    return s;
}

void blend(SurrogateQuad& into, const SurrogateQuad& bar, double rho) {
    const double keep = 1.0 - rho;
    into.constant = keep * into.constant + rho * bar.constant;
    for (std::size_t i = 0; i < into.lin_phi.size(); ++i)
        into.lin_phi[i] = keep * into.lin_phi[i] + rho * bar.lin_phi[i];
    for (std::size_t i = 0; i < into.lin_q.size(); ++i)
        into.lin_q[i] = keep * into.lin_q[i] + rho * bar.lin_q[i];
    into.quad_phi = keep * into.quad_phi + rho * bar.quad_phi;
    into.quad_q = keep * into.quad_q + rho * bar.quad_q;
}

// Worst shortfall max_k (rates_k - ratio model_k) at a point.
double model_shortfall(const SurrogateState& state, const std::vector<double>& rates,
                       const cvec& phi, const rvec& q) {
    double worst = -kInf;
    for (std::size_t k = 0; k < state.ratio.size(); ++k)
        worst = std::max(worst, rates[k] - surrogate_value(state.ratio[k], phi, q));
    return worst;
}

double row_magnitude(const PhaseConstraint& con, std::size_t k_users) {
    double c = std::abs(con.d);
    if (con.q.rows()) c = std::max(c, frobenius_norm(con.q));
    if (!con.q_lin.empty()) c = std::max(c, norm2(con.q_lin));
    for (std::size_t i = 0; i < k_users && i < con.aux_lin.size(); ++i)
        c = std::max(c, std::abs(con.aux_lin[i]));
    if (con.aux_quad.rows())
        for (double v : con.aux_quad.data()) c = std::max(c, std::abs(v));
    return c;
}

void scale_row(PhaseConstraint& con, double inv, std::size_t keep) {
    con.d *= inv;
    for (auto& z : con.q_lin) z *= inv;
    if (con.q.rows())
        for (auto& z : con.q.data()) z *= inv;
    for (std::size_t i = 0; i < con.aux_lin.size(); ++i)
        if (i != keep) con.aux_lin[i] *= inv;
    if (con.aux_quad.rows())
        for (double& v : con.aux_quad.data()) v *= inv;
}

// Rows shared by both per-slot subproblems: -ratio_k + rates_k (+ aux tail).
// with_margin appends one free variable that every row's value is shifted by.
// The ratio models carry the raw detection-ratio scale, which can sit several
// orders of magnitude above the unit-modulus variables; rows are therefore
// rescaled (a pure reparameterization) so the solvers stay conditioned. With
// the margin, one common factor is used and the margin coefficient is kept at
// -1, which puts the margin variable itself on the rescaled ratio scale.
PhaseProblem assemble_model_problem(const SurrogateState& state, const std::vector<double>& rates,
                                    const std::vector<double>& p_max_mw, bool with_margin) {
    const std::size_t k_users = state.q.q.size();
    const std::size_t n = state.phi.phi.size();
    PhaseProblem prob;
    prob.n_elements = n;
    prob.n_aux = k_users + (with_margin ? 1 : 0);
    for (std::size_t k = 0; k < k_users; ++k) {
        const SurrogateQuad& s = state.ratio[k];
        PhaseConstraint con;
        if (s.quad_phi != 0.0) {
            con.q = ComplexMatrix(n, n);
            for (std::size_t i = 0; i < n; ++i) con.q(i, i) = -s.quad_phi;
        }
        if (sumsq(s.lin_phi) > 0.0) {
            con.q_lin.resize(n);
            for (std::size_t i = 0; i < n; ++i) con.q_lin[i] = -s.lin_phi[i];
        }
        if (s.quad_q != 0.0) {
            con.aux_quad = RealMatrix(prob.n_aux, prob.n_aux);
            for (std::size_t i = 0; i < k_users; ++i) con.aux_quad(i, i) = -2.0 * s.quad_q;
        }
        con.aux_lin.assign(prob.n_aux, 0.0);
        for (std::size_t i = 0; i < k_users; ++i) con.aux_lin[i] = -s.lin_q[i];
        if (with_margin) con.aux_lin[k_users] = -1.0;
        con.d = rates[k] - s.constant;
        prob.constraints.push_back(std::move(con));
    }
    if (with_margin) {
        double c = 1.0;
        for (const auto& con : prob.constraints) c = std::max(c, row_magnitude(con, k_users));
        if (c > 1.0)
            for (auto& con : prob.constraints) scale_row(con, 1.0 / c, k_users);
    } else {
        for (auto& con : prob.constraints) {
            const double c = row_magnitude(con, k_users);
            if (c > 1.0) scale_row(con, 1.0 / c, con.aux_lin.size());
        }
    }
    prob.aux_lower.assign(prob.n_aux, 0.0);
    prob.aux_upper.assign(prob.n_aux, kInf);
    for (std::size_t i = 0; i < k_users; ++i) prob.aux_upper[i] = p_max_mw[i];
    if (with_margin) {
        prob.aux_lower[k_users] = -kInf;
        prob.aux_obj_lin.assign(prob.n_aux, 0.0);
        prob.aux_obj_lin[k_users] = 1.0;
    }
    return prob;
}

rvec clamped_powers(const rvec& aux, const std::vector<double>& p_max_mw) {
    rvec q(p_max_mw.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::clamp(aux[i], 0.0, p_max_mw[i]);
    return q;
}

SurrogateSolve finish_solve(const SurrogateState& state, const std::vector<double>& rates,
                            const std::vector<double>& p_max_mw, const EngineResult& er) {
    SurrogateSolve out;
    out.phi = er.phi;
    out.q.q = clamped_powers(er.aux, p_max_mw);
    out.beta = model_shortfall(state, rates, out.phi.phi, out.q.q);
    out.status = er.status;
    out.qcqp_solves = er.qcqp_solves;
    return out;
}

}  // namespace

CsiSampler resolved(const CsiSampler& sampler) {
    check_channels(sampler.base);
    if (!(sampler.eta >= 0.0) || !(sampler.eta <= 1.0))
        throw invalid_input("stochastic: eta must lie in [0, 1]");
    CsiSampler out = sampler;
    const std::size_t k_users = out.base.h_d.cols();
    auto fill = [&](std::vector<double>& sigma2, const ComplexMatrix& link, const char* what) {
        if (sigma2.empty()) {
            sigma2.resize(k_users);
            for (std::size_t k = 0; k < k_users; ++k) sigma2[k] = mean_entry_power(link, k);
            return;
        }
        if (sigma2.size() != k_users)
            throw invalid_input(std::string("stochastic: ") + what + " variance size mismatch");
        for (double v : sigma2)
            if (!std::isfinite(v) || v < 0.0)
                throw invalid_input(std::string("stochastic: ") + what +
                                    " variances must be finite and nonnegative");
    };
    fill(out.sigma2_reflect, out.base.h_r, "reflect");
    fill(out.sigma2_direct, out.base.h_d, "direct");
    return out;
}

ChannelSet draw_csi(const CsiSampler& sampler, std::uint64_t t) {
    const CsiSampler sam = resolved(sampler);
    const std::size_t k_users = sam.base.h_d.cols();
    const std::size_t m = sam.base.h_d.rows();
    const std::size_t n = sam.base.h_r.rows();
    CounterRng rng(derive_seed(sam.rng_seed, t, 0xC51));
    ChannelSet out;
    out.g = sam.base.g;
    out.noise_power_mw = sam.base.noise_power_mw;
    out.h_r = ComplexMatrix(n, k_users);
    out.h_d = ComplexMatrix(m, k_users);
    const bool fresh = sam.mode == CsiMode::RayleighUnbiased;
    const double err = fresh ? 1.0 : 1.0 - sam.eta;
    for (std::size_t k = 0; k < k_users; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const cplx z = rng.next_cnormal(err * sam.sigma2_reflect[k]);
            out.h_r(i, k) = fresh ? z : sam.base.h_r(i, k) + z;
        }
    for (std::size_t k = 0; k < k_users; ++k)
        for (std::size_t i = 0; i < m; ++i) {
            const cplx z = rng.next_cnormal(err * sam.sigma2_direct[k]);
            out.h_d(i, k) = fresh ? z : sam.base.h_d(i, k) + z;
        }
    return out;
}

double surrogate_value(const SurrogateQuad& s, const cvec& phi, const rvec& q) {
    if (phi.size() != s.lin_phi.size() || q.size() != s.lin_q.size())
        throw invalid_input("stochastic: surrogate evaluation dimensions mismatch");
    double v = s.constant + 2.0 * dot(s.lin_phi, phi).real();
    for (std::size_t i = 0; i < q.size(); ++i) v += s.lin_q[i] * q[i];
    v += s.quad_phi * sumsq(phi) + s.quad_q * sumsq(q);
    return v;
}

SurrogateState make_surrogate_state(const PhaseVector& phi0, const PowerVector& q0) {
    const std::size_t n = phi0.phi.size();
    const std::size_t k = q0.q.size();
    if (n == 0 || k == 0) throw invalid_input("stochastic: empty initial iterate");
    if (!all_finite(phi0.phi)) throw invalid_input("stochastic: phases must be finite");
    check_powers(q0, k);
    SurrogateState state;
    state.ratio.assign(k, zero_quad(n, k));
    state.objective = zero_quad(n, k);
    state.phi = phi0;
    state.q = q0;
    return state;
}

SinrGradient sinr_gradients(const ChannelSet& ch_hat, const PhaseVector& phi,
                            const PowerVector& q, int k) {
    check_channels(ch_hat);
    const std::size_t k_users = ch_hat.h_d.cols();
    const std::size_t m = ch_hat.h_d.rows();
    const std::size_t n = ch_hat.h_r.rows();
    check_powers(q, k_users);
    if (phi.phi.size() != n) throw invalid_input("stochastic: phase vector size mismatch");
    if (k < 0 || static_cast<std::size_t>(k) >= k_users)
        throw invalid_input("stochastic: user index out of range");
    const std::size_t uk = static_cast<std::size_t>(k);

    const ComplexMatrix h = effective_channel(ch_hat, phi);
    std::vector<cvec> hc(k_users);
    for (std::size_t j = 0; j < k_users; ++j) hc[j] = h.col(j);
    ComplexMatrix w(m, m);
    for (std::size_t i = 0; i < m; ++i) w(i, i) = ch_hat.noise_power_mw;
    for (std::size_t j = 0; j < k_users; ++j)
        if (j != uk) add_scaled_outer(w, q.q[j], hc[j]);
    const cvec z = hermitian_solve(w, hc[uk]);

    std::vector<cplx> cross(k_users);
    for (std::size_t j = 0; j < k_users; ++j) cross[j] = dot(z, hc[j]);

    SinrGradient out;
    out.grad_q.assign(k_users, 0.0);
    out.grad_q[uk] = cross[uk].real();
    const double qk = q.q[uk];
    for (std::size_t j = 0; j < k_users; ++j)
        if (j != uk) out.grad_q[j] = -qk * std::norm(cross[j]);

    // d(ratio)/d(phi*): the direct term through user k's channel plus the
    // interference term through the covariance, both peeled through G.
    const cvec gz = adjoint_vec(ch_hat.g, z);
    out.grad_phi.assign(n, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc = std::conj(ch_hat.h_r(i, uk)) * gz[i];
        for (std::size_t j = 0; j < k_users; ++j)
            if (j != uk) acc -= q.q[j] * cross[j] * std::conj(ch_hat.h_r(i, j)) * gz[i];
        out.grad_phi[i] = qk * acc;
    }
    return out;
}

double learning_rate(int t, const StochasticConfig& cfg) {
    if (t < 1) throw invalid_input("stochastic: slot index must be at least 1");
    if (!(cfg.rho_scale > 0.0) || !std::isfinite(cfg.rho_scale))
        throw invalid_input("stochastic: rho_scale must be positive");
    if (!(cfg.rho_exponent > 0.0) || !std::isfinite(cfg.rho_exponent))
        throw invalid_input("stochastic: rho_exponent must be positive");
    return std::min(1.0, cfg.rho_scale / std::pow(t + 1.0, cfg.rho_exponent));
}

void surrogate_update(SurrogateState& state, const ChannelSet& ch_hat,
                      const std::vector<double>& weights, const StochasticConfig& cfg) {
    check_state(state);
    check_channels(ch_hat);
    const std::size_t k_users = state.q.q.size();
    const std::size_t n = state.phi.phi.size();
    if (ch_hat.h_d.cols() != k_users || ch_hat.h_r.rows() != n)
        throw invalid_input("stochastic: estimate dimensions mismatch state");
    check_weights(weights, k_users);
    if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau) || !(cfg.tau0 >= 0.0) ||
        !std::isfinite(cfg.tau0))
        throw invalid_input("stochastic: proximal weights must be nonnegative");
    const double rho = learning_rate(state.t + 1, cfg);

    const cvec& phi0 = state.phi.phi;
    const rvec& q0 = state.q.q;
    const double center_sq = sumsq(phi0) + sumsq(q0);
    for (std::size_t k = 0; k < k_users; ++k) {
        const SinrGradient g = sinr_gradients(ch_hat, state.phi, state.q, static_cast<int>(k));
        const double at_center =
            sinr_optimal(ch_hat, state.phi, state.q, static_cast<int>(k));
        SurrogateQuad bar;
        bar.quad_phi = -0.5 * cfg.tau;
        bar.quad_q = -0.5 * cfg.tau;
        bar.lin_phi = add(g.grad_phi, scale(phi0, 0.5 * cfg.tau));
        bar.lin_q.resize(k_users);
        for (std::size_t i = 0; i < k_users; ++i) bar.lin_q[i] = g.grad_q[i] + cfg.tau * q0[i];
        double lin_at_center = 2.0 * dot(g.grad_phi, phi0).real();
        for (std::size_t i = 0; i < k_users; ++i) lin_at_center += g.grad_q[i] * q0[i];
        bar.constant = at_center - lin_at_center - 0.5 * cfg.tau * center_sq;
        blend(state.ratio[k], bar, rho);
    }

    SurrogateQuad obar = zero_quad(n, k_users);
    obar.quad_q = 0.5 * cfg.tau0;
    for (std::size_t i = 0; i < k_users; ++i) obar.lin_q[i] = weights[i] - cfg.tau0 * q0[i];
    obar.constant = 0.5 * cfg.tau0 * sumsq(q0);
    blend(state.objective, obar, rho);
    state.t += 1;
}

SurrogateSolve solve_p19(const SurrogateState& state, const std::vector<double>& rates,
                         const std::vector<double>& p_max_mw, const PhaseEngineConfig& engine) {
    check_state(state);
    const std::size_t k_users = state.q.q.size();
    check_rates(rates, k_users);
    check_budgets(p_max_mw, k_users);
    const PhaseProblem prob = assemble_model_problem(state, rates, p_max_mw, true);
    rvec aux0 = clamped_powers(state.q.q, p_max_mw);
    aux0.push_back(0.0);
    aux0.back() = phase_max_constraint(prob, state.phi.phi, aux0) + 1.0;
    const EngineResult er = solve_phase_problem(prob, state.phi, aux0, engine);
    return finish_solve(state, rates, p_max_mw, er);
}

SurrogateSolve solve_p20(const SurrogateState& state, const std::vector<double>& rates,
                         const std::vector<double>& p_max_mw, const PhaseEngineConfig& engine,
                         const SurrogateSolve* warm) {
    check_state(state);
    const std::size_t k_users = state.q.q.size();
    check_rates(rates, k_users);
    check_budgets(p_max_mw, k_users);
    PhaseProblem prob = assemble_model_problem(state, rates, p_max_mw, false);
    if (state.objective.quad_q != 0.0) {
        prob.aux_obj_quad = RealMatrix(k_users, k_users);
        for (std::size_t i = 0; i < k_users; ++i)
            prob.aux_obj_quad(i, i) = 2.0 * state.objective.quad_q;
    }
    prob.aux_obj_lin = state.objective.lin_q;
    const PhaseVector& phi0 = warm ? warm->phi : state.phi;
    const rvec aux0 = clamped_powers(warm ? warm->q.q : state.q.q, p_max_mw);
    if (phi0.phi.size() != state.phi.phi.size())
        throw invalid_input("stochastic: warm start dimensions mismatch");
    const EngineResult er = solve_phase_problem(prob, phi0, aux0, engine);
    return finish_solve(state, rates, p_max_mw, er);
}

void smooth_update(SurrogateState& state, const PowerVector& q_tilde, const PhaseVector& phi_tilde,
                   double rho) {
    check_state(state);
    const std::size_t k_users = state.q.q.size();
    const std::size_t n = state.phi.phi.size();
    check_powers(q_tilde, k_users);
    if (phi_tilde.phi.size() != n) throw invalid_input("stochastic: phase vector size mismatch");
    if (!all_finite(phi_tilde.phi)) throw invalid_input("stochastic: phases must be finite");
    if (!(rho >= 0.0) || !(rho <= 1.0)) throw invalid_input("stochastic: rho must lie in [0, 1]");
    if (rho == 0.0) return;
    if (rho == 1.0) {
        state.phi = phi_tilde;
        state.q = q_tilde;
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = std::arg(state.phi.phi[i]);
        // angle of the ratio = signed shorter-arc difference in (-pi, pi]
        const double delta = std::arg(phi_tilde.phi[i] * std::conj(state.phi.phi[i]));
        state.phi.phi[i] = std::polar(1.0, theta + rho * delta);
    }
    for (std::size_t i = 0; i < k_users; ++i)
        state.q.q[i] = (1.0 - rho) * state.q.q[i] + rho * q_tilde.q[i];
}

OnlineTrace run_online(const CsiSampler& sampler, const std::vector<double>& rates,
                       const std::vector<double>& p_max_mw, const std::vector<double>& weights,
                       const StochasticConfig& cfg) {
    const CsiSampler sam = resolved(sampler);
    const std::size_t k_users = sam.base.h_d.cols();
    const std::size_t n = sam.base.h_r.rows();
    check_rates(rates, k_users);
    check_budgets(p_max_mw, k_users);
    check_weights(weights, k_users);
    if (!(cfg.tau > 0.0) || !(cfg.tau0 > 0.0))
        throw invalid_input("stochastic: proximal weights must be positive");
    if (!(cfg.eps0 >= 0.0) || !std::isfinite(cfg.eps0))
        throw invalid_input("stochastic: eps0 must be nonnegative");
    if (cfg.max_slots < 1) throw invalid_input("stochastic: max_slots must be at least 1");
    if (!(cfg.start_fraction > 0.0) || !(cfg.start_fraction <= 1.0))
        throw invalid_input("stochastic: start_fraction must lie in (0, 1]");
    if (cfg.validation_samples < 0)
        throw invalid_input("stochastic: validation_samples must be nonnegative");
    learning_rate(1, cfg);

    CounterRng rng(derive_seed(cfg.rng_seed, 0xA11));
    PhaseVector phi0 = random_phase_vector(n, rng);
    PowerVector q0;
    q0.q.resize(k_users);
    for (std::size_t i = 0; i < k_users; ++i) q0.q[i] = cfg.start_fraction * p_max_mw[i];
    SurrogateState state = make_surrogate_state(phi0, q0);

    OnlineTrace trace;
    for (int t = 1; t <= cfg.max_slots; ++t) {
        const ChannelSet ch_hat = draw_csi(sam, static_cast<std::uint64_t>(t));
        surrogate_update(state, ch_hat, weights, cfg);

        OnlineSlot slot;
        const SurrogateSolve s19 = solve_p19(state, rates, p_max_mw, cfg.engine);
        trace.qcqp_solves += s19.qcqp_solves;
        slot.beta = s19.beta;
        SurrogateSolve s20;
        const SurrogateSolve* chosen = &s19;
        if (s19.beta < 0.0) {
            s20 = solve_p20(state, rates, p_max_mw, cfg.engine, &s19);
            trace.qcqp_solves += s20.qcqp_solves;
            chosen = &s20;
            slot.power_step = true;
        }
        slot.model_violation = std::max(0.0, chosen->beta);

        const cvec prev_phi = state.phi.phi;
        const rvec prev_q = state.q.q;
        smooth_update(state, chosen->q, chosen->phi, learning_rate(state.t, cfg));

        slot.weighted_power = 0.0;
        for (std::size_t i = 0; i < k_users; ++i)
            slot.weighted_power += weights[i] * state.q.q[i];
        double dq = 0.0;
        for (std::size_t i = 0; i < k_users; ++i) {
            const double d = state.q.q[i] - prev_q[i];
            dq += d * d;
        }
        slot.iterate_change = norm2(sub(state.phi.phi, prev_phi)) + std::sqrt(dq);

        if (cfg.validation_samples > 0) {
            slot.validation_sinr.assign(k_users, 0.0);
            const std::uint64_t base =
                kSlotValidationBase +
                static_cast<std::uint64_t>(t - 1) * static_cast<std::uint64_t>(cfg.validation_samples);
            for (int s = 0; s < cfg.validation_samples; ++s) {
                const ChannelSet held = draw_csi(sam, base + static_cast<std::uint64_t>(s));
                for (std::size_t k = 0; k < k_users; ++k)
                    slot.validation_sinr[k] +=
                        sinr_optimal(held, state.phi, state.q, static_cast<int>(k));
            }
            for (double& v : slot.validation_sinr) v /= cfg.validation_samples;
        }

        trace.slots.push_back(std::move(slot));
        if (trace.slots.back().iterate_change <= cfg.eps0) {
            trace.converged = true;
            break;
        }
    }
    trace.phi = state.phi;
    trace.q = state.q;
    trace.weighted_power = 0.0;
    for (std::size_t i = 0; i < k_users; ++i)
        trace.weighted_power += weights[i] * state.q.q[i];
    return trace;
}

std::vector<double> validate_sinr(const CsiSampler& sampler, const PhaseVector& phi,
                                  const PowerVector& q, int samples) {
    const CsiSampler sam = resolved(sampler);
    const std::size_t k_users = sam.base.h_d.cols();
    check_powers(q, k_users);
    if (phi.phi.size() != sam.base.h_r.rows())
        throw invalid_input("stochastic: phase vector size mismatch");
    if (samples < 1) throw invalid_input("stochastic: samples must be at least 1");
    std::vector<double> acc(k_users, 0.0);
    for (int s = 0; s < samples; ++s) {
        const ChannelSet held = draw_csi(sam, kValidationBase + static_cast<std::uint64_t>(s));
        for (std::size_t k = 0; k < k_users; ++k)
            acc[k] += sinr_optimal(held, phi, q, static_cast<int>(k));
    }
    for (double& v : acc) v /= samples;
    return acc;
}

}  // namespace irsopt
