#include "irsopt/powermin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irsopt/errors.hpp"

namespace irsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_channels(const ChannelSet& ch) {
    const std::size_t k = ch.h_d.cols();
    const std::size_t m = ch.h_d.rows();
    const std::size_t n = ch.h_r.rows();
    if (k == 0 || m == 0 || n == 0) throw invalid_input("powermin: empty channel set");
    if (ch.h_r.cols() != k) throw invalid_input("powermin: h_r/h_d user count mismatch");
    if (ch.g.rows() != m || ch.g.cols() != n)
        throw invalid_input("powermin: g dimensions inconsistent with h_r/h_d");
    require_finite(ch.g, "powermin: g");
    require_finite(ch.h_r, "powermin: h_r");
    require_finite(ch.h_d, "powermin: h_d");
    if (!(ch.noise_power_mw > 0.0) || !std::isfinite(ch.noise_power_mw))
        throw invalid_input("powermin: noise power must be positive");
}

void check_rates(const std::vector<double>& rates, std::size_t k) {
    if (rates.size() != k) throw invalid_input("powermin: rates size mismatch");
    for (double r : rates)
        if (!std::isfinite(r) || r < 0.0)
            throw invalid_input("powermin: rates must be finite and nonnegative");
}

void check_budgets(const std::vector<double>& p_max_mw, std::size_t k) {
    if (p_max_mw.size() != k) throw invalid_input("powermin: power budget size mismatch");
    for (double p : p_max_mw)
        if (!std::isfinite(p) || p <= 0.0)
            throw invalid_input("powermin: power budgets must be positive");
}

void check_weights(const std::vector<double>& weights, std::size_t k) {
    if (weights.size() != k) throw invalid_input("powermin: weights size mismatch");
    for (double w : weights)
        if (!std::isfinite(w) || w < 0.0)
            throw invalid_input("powermin: weights must be finite and nonnegative");
}

void check_powers(const PowerVector& q, std::size_t k) {
    if (q.q.size() != k) throw invalid_input("powermin: power vector size mismatch");
    for (double v : q.q)
        if (!std::isfinite(v) || v < 0.0)
            throw invalid_input("powermin: powers must be finite and nonnegative");
}

void check_ys(const std::vector<cvec>& ys, std::size_t m, std::size_t k) {
    if (ys.size() != k) throw invalid_input("powermin: receiver surrogate count mismatch");
    for (const auto& y : ys) {
        if (y.size() != m) throw invalid_input("powermin: receiver surrogate length mismatch");
        if (!all_finite(y)) throw invalid_input("powermin: receiver surrogates must be finite");
    }
}

double norm2_sq(const cvec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return s;
}

double transform_cols(const ComplexMatrix& h, double noise_mw, const std::vector<double>& q,
                      const cvec& y, std::size_t k) {
    double val = 2.0 * std::sqrt(q[k]) * dot(y, h.col(k)).real() - noise_mw * norm2_sq(y);
    for (std::size_t j = 0; j < h.cols(); ++j)
        if (j != k) val -= q[j] * std::norm(dot(y, h.col(j)));
    return val;
}

// Divide each constraint row by its largest coefficient magnitude. The
// surrogate receivers grow like the inverse noise power wherever interference
// dominates, which leaves rows spanning many orders of magnitude; balancing
// them keeps the solvers conditioned without moving the feasible set.
void balance_rows(ConvexQcqp& prob) {
    for (auto& con : prob.constraints) {
        double c = std::abs(con.d);
        for (double v : con.b) c = std::max(c, std::abs(v));
        if (con.q.rows())
            for (double v : con.q.data()) c = std::max(c, std::abs(v));
        if (c <= 1.0) continue;
        const double inv = 1.0 / c;
        con.d *= inv;
        for (double& v : con.b) v *= inv;
        if (con.q.rows())
            for (double& v : con.q.data()) v *= inv;
    }
}

void balance_rows(PhaseProblem& prob) {
    for (auto& con : prob.constraints) {
        double c = std::abs(con.d);
        if (con.q.rows()) c = std::max(c, frobenius_norm(con.q));
        if (!con.q_lin.empty()) c = std::max(c, norm2(con.q_lin));
        if (c <= 1.0) continue;
        const double inv = 1.0 / c;
        con.d *= inv;
        for (auto& z : con.q_lin) z *= inv;
        if (con.q.rows())
            for (auto& z : con.q.data()) z *= inv;
        for (double& v : con.aux_lin) v *= inv;
    }
}

}  // namespace

std::vector<cvec> y_update(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q) {
    check_channels(ch);
    const std::size_t k_users = ch.h_d.cols();
    const std::size_t m = ch.h_d.rows();
    check_powers(q, k_users);

    const ComplexMatrix h = effective_channel(ch, phi);
    std::vector<cvec> cols(k_users);
    for (std::size_t j = 0; j < k_users; ++j) cols[j] = h.col(j);

    std::vector<cvec> ys(k_users);
    for (std::size_t k = 0; k < k_users; ++k) {
        if (q.q[k] == 0.0) {
            ys[k].assign(m, cplx{0.0, 0.0});
            continue;
        }
        ComplexMatrix w(m, m);
        for (std::size_t i = 0; i < m; ++i) w(i, i) = ch.noise_power_mw;
        for (std::size_t j = 0; j < k_users; ++j)
            if (j != k) add_scaled_outer(w, q.q[j], cols[j]);
        cvec y = hermitian_solve(w, cols[k]);
        const double sq = std::sqrt(q.q[k]);
        for (auto& z : y) z *= sq;
        ys[k] = std::move(y);
    }
    return ys;
}

double transform_value(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q,
                       const std::vector<cvec>& ys, int k) {
    check_channels(ch);
    const std::size_t k_users = ch.h_d.cols();
    check_powers(q, k_users);
    check_ys(ys, ch.h_d.rows(), k_users);
    if (k < 0 || static_cast<std::size_t>(k) >= k_users)
        throw invalid_input("powermin: user index out of range");
    const ComplexMatrix h = effective_channel(ch, phi);
    return transform_cols(h, ch.noise_power_mw, q.q, ys[k], static_cast<std::size_t>(k));
}

ConvexQcqp assemble_p13(const ChannelSet& ch, const PhaseVector& phi,
                        const std::vector<cvec>& ys, const std::vector<double>& weights,
                        const std::vector<double>& rates, const std::vector<double>& p_max_mw) {
    check_channels(ch);
    const std::size_t k_users = ch.h_d.cols();
    check_rates(rates, k_users);
    check_budgets(p_max_mw, k_users);
    check_weights(weights, k_users);
    check_ys(ys, ch.h_d.rows(), k_users);

    const ComplexMatrix h = effective_channel(ch, phi);
    ConvexQcqp prob;
    prob.n = k_users;
    prob.p = RealMatrix(k_users, k_users);
    prob.c.assign(k_users, 0.0);
    prob.lower.assign(k_users, 0.0);
    prob.upper.resize(k_users);
    for (std::size_t k = 0; k < k_users; ++k) {
        prob.p(k, k) = 2.0 * weights[k];
        prob.upper[k] = std::sqrt(p_max_mw[k]);
    }

    for (std::size_t k = 0; k < k_users; ++k) {
        const cvec& y = ys[k];
        if (norm2_sq(y) == 0.0 && rates[k] == 0.0) continue;
        QuadConstraint con;
        con.q = RealMatrix(k_users, k_users);
        con.b.assign(k_users, 0.0);
        for (std::size_t j = 0; j < k_users; ++j) {
            const cplx yh = dot(y, h.col(j));
            if (j == k)
                con.b[k] = -2.0 * yh.real();
            else
                con.q(j, j) = 2.0 * std::norm(yh);
        }
        con.d = ch.noise_power_mw * norm2_sq(y) + rates[k];
        prob.constraints.push_back(std::move(con));
    }
    return prob;
}

PhaseProblem assemble_p14(const ChannelSet& ch, const PowerVector& q, const std::vector<cvec>& ys,
                          const std::vector<double>& rates) {
    check_channels(ch);
    const std::size_t k_users = ch.h_d.cols();
    const std::size_t n = ch.h_r.rows();
    check_rates(rates, k_users);
    check_powers(q, k_users);
    check_ys(ys, ch.h_d.rows(), k_users);

    PhaseProblem prob;
    prob.n_elements = n;
    prob.n_aux = 1;
    prob.aux_obj_lin = {1.0};

    for (std::size_t k = 0; k < k_users; ++k) {
        const cvec& y = ys[k];
        if (norm2_sq(y) == 0.0 && rates[k] == 0.0) continue;
        const cvec gy = adjoint_vec(ch.g, y);
        ComplexMatrix qmat(n, n);
        cvec qlin(n, cplx{0.0, 0.0});
        double d = rates[k] + ch.noise_power_mw * norm2_sq(y);
        for (std::size_t j = 0; j < k_users; ++j) {
            // user j's reflected response seen through y_k and its direct term
            cvec u(n);
            for (std::size_t i = 0; i < n; ++i) u[i] = std::conj(ch.h_r(i, j)) * gy[i];
            const cplx beta = dot(y, ch.h_d.col(j));
            if (j == k) {
                const double sq = std::sqrt(q.q[k]);
                for (std::size_t i = 0; i < n; ++i) qlin[i] -= sq * u[i];
                d -= 2.0 * sq * beta.real();
            } else {
                add_scaled_outer(qmat, q.q[j], u);
                for (std::size_t i = 0; i < n; ++i) qlin[i] += q.q[j] * beta * u[i];
                d += q.q[j] * std::norm(beta);
            }
        }
        PhaseConstraint con;
        if (frobenius_norm(qmat) > 0.0) con.q = std::move(qmat);
        if (norm2(qlin) > 0.0) con.q_lin = std::move(qlin);
        con.aux_lin = {-1.0};
        con.d = d;
        prob.constraints.push_back(std::move(con));
    }
    validate_phase_problem(prob);
    return prob;
}

PowerMinReport minimize_power(const ChannelSet& ch, const std::vector<double>& rates,
                              const std::vector<double>& p_max_mw,
                              const std::vector<double>& weights, const PowerMinConfig& cfg) {
    check_channels(ch);
    const std::size_t k_users = ch.h_d.cols();
    check_rates(rates, k_users);
    check_budgets(p_max_mw, k_users);
    check_weights(weights, k_users);
    if (cfg.max_outer < 1) throw invalid_input("powermin: max_outer must be at least 1");
    if (cfg.power_hits < 1) throw invalid_input("powermin: power_hits must be at least 1");
    if (!(cfg.power_tol >= 0.0)) throw invalid_input("powermin: power_tol must be nonnegative");

    FeasibilityConfig bcfg = cfg.bootstrap;
    bcfg.engine = cfg.engine;
    bcfg.qcqp = cfg.qcqp;
    const FeasibilityReport boot = check_feasibility(ch, rates, p_max_mw, bcfg);

    PowerMinReport rep;
    rep.qcqp_solves = boot.qcqp_solves;
    if (!boot.feasible)
        throw infeasible_error("powermin: no operating point meets every target within budget");

    PhaseVector phi = boot.phi;
    PowerVector q = boot.q;
    // a user with no target never needs to transmit
    for (std::size_t k = 0; k < k_users; ++k)
        if (rates[k] == 0.0) q.q[k] = 0.0;

    // The bootstrap tends to overshoot the targets by orders of magnitude,
    // which inflates the surrogate receivers and with them every block's
    // numeric range. Uniform power scaling moves every SINR monotonically, so
    // bisect for the smallest factor that still meets the targets.
    const auto scaled_ok = [&](double t) {
        PowerVector qs = q;
        for (auto& v : qs.q) v *= t;
        for (std::size_t k = 0; k < k_users; ++k)
            if (rates[k] > 0.0 && sinr_optimal(ch, phi, qs, static_cast<int>(k)) < rates[k])
                return false;
        return true;
    };
    if (scaled_ok(1.0)) {
        double lo = 0.0;
        double hi = 1.0;
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            (scaled_ok(mid) ? hi : lo) = mid;
        }
        for (auto& v : q.q) v *= hi;
    }

    const auto weighted = [&](const PowerVector& qq) {
        double s = 0.0;
        for (std::size_t k = 0; k < k_users; ++k) s += weights[k] * qq.q[k];
        return s;
    };
    const auto worst_gap = [&](const ComplexMatrix& h, const PowerVector& qq,
                               const std::vector<cvec>& ys) {
        double g = -kInf;
        for (std::size_t k = 0; k < k_users; ++k) {
            if (rates[k] == 0.0 && qq.q[k] == 0.0) continue;
            g = std::max(g, rates[k] - transform_cols(h, ch.noise_power_mw, qq.q, ys[k], k));
        }
        return g;
    };

    bool any_target = false;
    for (double r : rates) any_target = any_target || r > 0.0;
    if (!any_target) {
        rep.phi = phi;
        rep.q = q;
        rep.power_trace = {0.0};
        return rep;
    }

    double prev = weighted(q);
    rep.power_trace.push_back(prev);
    int hits = 0;
    int outer = 0;
    while (outer < cfg.max_outer) {
        ++outer;
        const std::vector<cvec> ys = y_update(ch, phi, q);
        const ComplexMatrix h = effective_channel(ch, phi);

        ConvexQcqp p13 = assemble_p13(ch, phi, ys, weights, rates, p_max_mw);
        balance_rows(p13);
        rvec x0(k_users);
        for (std::size_t k = 0; k < k_users; ++k) x0[k] = std::sqrt(q.q[k]);
        const QcqpSolution sol = qcqp_solve(p13, cfg.qcqp, x0);
        ++rep.qcqp_solves;
        if (sol.status != QcqpStatus::Infeasible) {
            PowerVector q_new = q;
            for (std::size_t k = 0; k < k_users; ++k) {
                const double p = std::clamp(sol.x[k], 0.0, std::sqrt(p_max_mw[k]));
                q_new.q[k] = p * p;
            }
            if (sol.boundary_start)  // blend back toward the last accepted point
                for (std::size_t k = 0; k < k_users; ++k)
                    q_new.q[k] = 0.5 * q.q[k] + 0.5 * q_new.q[k];
            for (std::size_t k = 0; k < k_users; ++k)
                if (rates[k] == 0.0) q_new.q[k] = 0.0;
            bool ok = weighted(q_new) <= prev + 1e-12 * (1.0 + std::abs(prev));
            for (std::size_t k = 0; ok && k < k_users; ++k) {
                if (rates[k] == 0.0) continue;
                ok = rates[k] - transform_cols(h, ch.noise_power_mw, q_new.q, ys[k], k) <=
                     1e-9 * (1.0 + rates[k]);
            }
            if (ok) q = std::move(q_new);
        }

        const double beta_cur = worst_gap(h, q, ys);
        PhaseProblem p14 = assemble_p14(ch, q, ys, rates);
        balance_rows(p14);
        const EngineResult er = solve_phase_problem(p14, phi, {beta_cur + 1.0}, cfg.engine);
        rep.qcqp_solves += er.qcqp_solves;
        const ComplexMatrix h_cand = effective_channel(ch, er.phi);
        const double beta_cand = worst_gap(h_cand, q, ys);
        double beta = beta_cur;
        if (beta_cand <= beta_cur + 1e-12 * (1.0 + std::abs(beta_cur))) {
            phi = er.phi;
            beta = beta_cand;
        }
        rep.beta_trace.push_back(beta);

        const double cur = weighted(q);
        rep.power_trace.push_back(cur);
        if (prev - cur <= cfg.power_tol * (1.0 + std::abs(prev))) {
            if (++hits >= cfg.power_hits) {
                prev = cur;
                break;
            }
        } else {
            hits = 0;
        }
        prev = cur;
    }

    rep.phi = phi;
    rep.q = q;
    rep.weighted_power = weighted(q);
    rep.outer_iterations = outer;
    return rep;
}

}  // namespace irsopt
