#include "irsopt/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irsopt/errors.hpp"
#include "irsopt/rng.hpp"

namespace irsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_channel_inputs(const ChannelSet& ch, const std::vector<double>& rates,
                          const std::vector<double>& p_max_mw, bool need_power) {
    const std::size_t k = ch.h_d.cols();
    const std::size_t m = ch.h_d.rows();
    const std::size_t n = ch.h_r.rows();
    if (k == 0 || m == 0 || n == 0) throw invalid_input("feasibility: empty channel set");
    if (ch.h_r.cols() != k) throw invalid_input("feasibility: h_r/h_d user count mismatch");
    if (ch.g.rows() != m || ch.g.cols() != n)
        throw invalid_input("feasibility: g dimensions inconsistent with h_r/h_d");
    require_finite(ch.g, "feasibility: g");
    require_finite(ch.h_r, "feasibility: h_r");
    require_finite(ch.h_d, "feasibility: h_d");
    if (!(ch.noise_power_mw > 0.0) || !std::isfinite(ch.noise_power_mw))
        throw invalid_input("feasibility: noise power must be positive");
    if (rates.size() != k) throw invalid_input("feasibility: rates size mismatch");
    for (double r : rates)
        if (!std::isfinite(r) || r < 0.0)
            throw invalid_input("feasibility: rates must be finite and nonnegative");
    if (need_power) {
        if (p_max_mw.size() != k) throw invalid_input("feasibility: power budget size mismatch");
        for (double p : p_max_mw)
            if (!std::isfinite(p) || p <= 0.0)
                throw invalid_input("feasibility: power budgets must be positive");
    }
}

void check_receivers(const std::vector<cvec>& receivers, std::size_t m, std::size_t k) {
    if (receivers.size() != k) throw invalid_input("feasibility: receiver count mismatch");
    for (const auto& w : receivers) {
        if (w.size() != m) throw invalid_input("feasibility: receiver length mismatch");
        if (!all_finite(w)) throw invalid_input("feasibility: receiver entries must be finite");
    }
}

double norm2_sq(const cvec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return s;
}

}  // namespace

ConvexQcqp assemble_p6(const ChannelSet& ch, const PhaseVector& phi,
                       const std::vector<cvec>& receivers, const std::vector<double>& rates,
                       const std::vector<double>& p_max_mw) {
    check_channel_inputs(ch, rates, p_max_mw, true);
    const std::size_t k_users = ch.h_d.cols();
    check_receivers(receivers, ch.h_d.rows(), k_users);

    const ComplexMatrix h = effective_channel(ch, phi);
    ConvexQcqp prob;
    prob.n = k_users + 1;
    prob.c.assign(prob.n, 0.0);
    prob.c[k_users] = 1.0;
    prob.lower.assign(prob.n, 0.0);
    prob.upper.assign(prob.n, kInf);
    prob.lower[k_users] = -kInf;
    for (std::size_t k = 0; k < k_users; ++k) prob.upper[k] = std::sqrt(p_max_mw[k]);

    for (std::size_t k = 0; k < k_users; ++k) {
        const cvec& w = receivers[k];
        const double s = 1.0 + rates[k];
        QuadConstraint con;
        con.q = RealMatrix(prob.n, prob.n);
        con.b.assign(prob.n, 0.0);
        for (std::size_t j = 0; j < k_users; ++j) {
            const cplx wh = dot(w, h.col(j));
            con.q(j, j) = 2.0 * s * std::norm(wh);
            if (j == k) con.b[k] = -2.0 * s * wh.real();
        }
        con.b[k_users] = -1.0;
        con.d = s * (ch.noise_power_mw * norm2_sq(w) + 1.0);
        prob.constraints.push_back(std::move(con));
    }
    return prob;
}

PhaseProblem assemble_p8(const ChannelSet& ch, const PowerVector& q,
                         const std::vector<cvec>& receivers, const std::vector<double>& rates) {
    check_channel_inputs(ch, rates, {}, false);
    const std::size_t k_users = ch.h_d.cols();
    const std::size_t n = ch.h_r.rows();
    check_receivers(receivers, ch.h_d.rows(), k_users);
    if (q.q.size() != k_users) throw invalid_input("feasibility: power vector size mismatch");
    for (double v : q.q)
        if (!std::isfinite(v) || v < 0.0)
            throw invalid_input("feasibility: powers must be finite and nonnegative");

    PhaseProblem prob;
    prob.n_elements = n;
    prob.n_aux = 1;
    prob.aux_obj_lin = {1.0};

    for (std::size_t k = 0; k < k_users; ++k) {
        const cvec& w = receivers[k];
        const double s = 1.0 + rates[k];
        const cvec gw = adjoint_vec(ch.g, w);
        ComplexMatrix qmat(n, n);
        cvec qlin(n, cplx{0.0, 0.0});
        double d = ch.noise_power_mw * norm2_sq(w) + 1.0;
        for (std::size_t j = 0; j < k_users; ++j) {
            // user j's reflected response seen by receiver k and its direct term
            cvec u(n);
            for (std::size_t i = 0; i < n; ++i) u[i] = std::conj(ch.h_r(i, j)) * gw[i];
            const cplx beta = dot(w, ch.h_d.col(j));
            add_scaled_outer(qmat, q.q[j], u);
            for (std::size_t i = 0; i < n; ++i) qlin[i] += q.q[j] * beta * u[i];
            d += q.q[j] * std::norm(beta);
            if (j == k) {
                const double sq = std::sqrt(q.q[j]);
                for (std::size_t i = 0; i < n; ++i) qlin[i] -= sq * u[i];
                d -= 2.0 * sq * beta.real();
            }
        }
        PhaseConstraint con;
        if (frobenius_norm(qmat) > 0.0) {
            for (auto& z : qmat.data()) z *= s;
            con.q = std::move(qmat);
        }
        if (norm2(qlin) > 0.0) {
            for (auto& z : qlin) z *= s;
            con.q_lin = std::move(qlin);
        }
        con.aux_lin = {-1.0};
        con.d = s * d;
        prob.constraints.push_back(std::move(con));
    }
    validate_phase_problem(prob);
    return prob;
}

FeasibilityReport check_feasibility(const ChannelSet& ch, const std::vector<double>& rates,
                                    const std::vector<double>& p_max_mw,
                                    const FeasibilityConfig& cfg) {
    check_channel_inputs(ch, rates, p_max_mw, true);
    if (cfg.max_outer < 1) throw invalid_input("feasibility: max_outer must be at least 1");
    if (cfg.alpha_hits < 1) throw invalid_input("feasibility: alpha_hits must be at least 1");
    if (!(cfg.alpha_tol >= 0.0)) throw invalid_input("feasibility: alpha_tol must be nonnegative");
    const std::size_t k_users = ch.h_d.cols();
    const std::size_t n = ch.h_r.rows();

    CounterRng rng(derive_seed(cfg.rng_seed, 3, 0));
    PhaseVector phi = random_phase_vector(n, rng);
    std::vector<double> q0(k_users);
    for (std::size_t k = 0; k < k_users; ++k) {
        const double u = 1.0 - rng.next_double();  // (0, 1]
        q0[k] = p_max_mw[k] * (0.5 + 0.5 * u);
    }
    PowerVector q = make_power_vector(q0);

    FeasibilityReport rep;
    std::vector<cvec> w;
    const auto worst = [&](const PhaseVector& ph, const PowerVector& qq) {
        double a = -kInf;
        for (std::size_t k = 0; k < k_users; ++k)
            a = std::max(a, (1.0 + rates[k]) * mse(ch, ph, qq, w[k], static_cast<int>(k)));
        return a;
    };

    double alpha = kInf;
    double alpha_prev = kInf;
    int hits = 0;
    int outer = 0;
    bool done = false;
    while (outer < cfg.max_outer && !done) {
        ++outer;
        w = mmse_receivers(ch, phi, q);
        alpha = worst(phi, q);
        if (alpha <= 1.0) {
            rep.alpha_trace.push_back(alpha);
            break;
        }

        const ConvexQcqp p6 = assemble_p6(ch, phi, w, rates, p_max_mw);
        rvec x0(k_users + 1);
        for (std::size_t k = 0; k < k_users; ++k) x0[k] = std::sqrt(q.q[k]);
        x0[k_users] = alpha + 1.0;
        const QcqpSolution sol = qcqp_solve(p6, cfg.qcqp, x0);
        ++rep.qcqp_solves;
        if (sol.status != QcqpStatus::Infeasible) {
            PowerVector q_new = q;
            for (std::size_t k = 0; k < k_users; ++k) {
                const double p = std::clamp(sol.x[k], 0.0, std::sqrt(p_max_mw[k]));
                q_new.q[k] = p * p;
            }
            const double cand = worst(phi, q_new);
            if (cand <= alpha + 1e-12 * (1.0 + std::abs(alpha))) {
                q = std::move(q_new);
                alpha = cand;
            }
        }
        if (alpha <= 1.0) {
            rep.alpha_trace.push_back(alpha);
            break;
        }

        const PhaseProblem p8 = assemble_p8(ch, q, w, rates);
        const EngineResult er = solve_phase_problem(p8, phi, {alpha + 1.0}, cfg.engine);
        rep.qcqp_solves += er.qcqp_solves;
        const double cand = worst(er.phi, q);
        if (cand <= alpha + 1e-12 * (1.0 + std::abs(alpha))) {
            phi = er.phi;
            alpha = cand;
        }
        rep.alpha_trace.push_back(alpha);
        if (alpha <= 1.0) break;

        if (std::abs(alpha_prev - alpha) <= cfg.alpha_tol) {
            if (++hits >= cfg.alpha_hits) done = true;
        } else {
            hits = 0;
        }
        alpha_prev = alpha;
    }

    w = mmse_receivers(ch, phi, q);
    alpha = worst(phi, q);
    rep.alpha = alpha;
    rep.phi = phi;
    rep.q = q;
    rep.receivers = w;
    rep.outer_iterations = outer;
    bool ok = alpha <= 1.0 + 1e-9;
    for (std::size_t k = 0; ok && k < k_users; ++k)
        ok = sinr_optimal(ch, phi, q, static_cast<int>(k)) >= rates[k] * (1.0 - 1e-6);
    rep.feasible = ok;
    return rep;
}

}  // namespace irsopt
