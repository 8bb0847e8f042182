#include "irsopt/phase_engines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "irsopt/errors.hpp"
#include "irsopt/qcqp.hpp"

namespace irsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_hermitian_psd(const ComplexMatrix& q, std::size_t n, const char* what) {
    if (q.rows() != n || q.cols() != n)
        throw invalid_input(std::string("phase problem: ") + what + " has wrong dimensions");
    require_finite(q, what);
    double scale = frobenius_norm(q), asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            asym = std::max(asym, std::abs(q(i, j) - std::conj(q(j, i))));
    if (asym > 1e-10 * (1.0 + scale))
        throw invalid_input(std::string("phase problem: ") + what + " is not Hermitian");
    if (!spd_factorizable(lift_matrix(q), 1e-9 * scale + 1e-30))
        throw invalid_input(std::string("phase problem: ") + what +
                            " is not positive semidefinite");
}

double aux_quad_half(const RealMatrix& a, const rvec& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) v += 0.5 * x[i] * a(i, j) * x[j];
    return v;
}

// Maps a PhaseProblem onto the real QCQP x = [Re phi; Im phi; aux] so that
// objective and constraint values (hence duals) carry over one-to-one.
struct Encoder {
    const PhaseProblem& prob;
    std::size_t n;    // phase count
    std::size_t nx;   // 2n + n_aux
    bool disc;
    ConvexQcqp base;

    Encoder(const PhaseProblem& p, bool disc_bound)
        : prob(p), n(p.n_elements), nx(2 * p.n_elements + p.n_aux), disc(disc_bound) {
        base.n = nx;
        base.p = RealMatrix(nx, nx);
        if (prob.aux_obj_quad.rows() == prob.n_aux && prob.n_aux > 0)
            for (std::size_t i = 0; i < prob.n_aux; ++i)
                for (std::size_t j = 0; j < prob.n_aux; ++j)
                    base.p(2 * n + i, 2 * n + j) = prob.aux_obj_quad(i, j);
        base.c.assign(nx, 0.0);
        if (!prob.aux_obj_lin.empty())
            for (std::size_t i = 0; i < prob.n_aux; ++i)
                base.c[2 * n + i] = prob.aux_obj_lin[i];

        for (const auto& pc : prob.constraints) {
            QuadConstraint qc;
            const bool has_q = pc.q.rows() == n;
            const bool has_aq = pc.aux_quad.rows() == prob.n_aux && prob.n_aux > 0;
            if (has_q || has_aq) {
                qc.q = RealMatrix(nx, nx);
                if (has_q) {
                    const RealMatrix lifted = lift_matrix(pc.q);
                    for (std::size_t i = 0; i < 2 * n; ++i)
                        for (std::size_t j = 0; j < 2 * n; ++j) qc.q(i, j) = 2.0 * lifted(i, j);
                }
                if (has_aq)
                    for (std::size_t i = 0; i < prob.n_aux; ++i)
                        for (std::size_t j = 0; j < prob.n_aux; ++j)
                            qc.q(2 * n + i, 2 * n + j) = pc.aux_quad(i, j);
            }
            qc.b.assign(nx, 0.0);
            if (!pc.q_lin.empty()) {
                const rvec lin = lift_to_real(pc.q_lin);
                for (std::size_t i = 0; i < 2 * n; ++i) qc.b[i] = 2.0 * lin[i];
            }
            if (!pc.aux_lin.empty())
                for (std::size_t i = 0; i < prob.n_aux; ++i) qc.b[2 * n + i] = pc.aux_lin[i];
            qc.d = pc.d;
            base.constraints.push_back(std::move(qc));
        }
        if (disc)
            for (std::size_t e = 0; e < n; ++e) {
                QuadConstraint qc;
                qc.q = RealMatrix(nx, nx);
                qc.q(e, e) = 2.0;
                qc.q(n + e, n + e) = 2.0;
                qc.d = -1.0;
                base.constraints.push_back(std::move(qc));
            }

        base.lower.assign(nx, -kInf);
        base.upper.assign(nx, kInf);
        for (std::size_t i = 0; i < prob.n_aux; ++i) {
            if (!prob.aux_lower.empty()) base.lower[2 * n + i] = prob.aux_lower[i];
            if (!prob.aux_upper.empty()) base.upper[2 * n + i] = prob.aux_upper[i];
        }
    }

    // objective contribution (w/2)*||phi||^2 + Re{a^H phi} on the phase block
    void set_phi_objective(double w, const cvec& a) {
        for (std::size_t i = 0; i < 2 * n; ++i) base.p(i, i) = w;
        const rvec la = lift_to_real(a);
        for (std::size_t i = 0; i < 2 * n; ++i) base.c[i] = la[i];
    }

    rvec pack(const cvec& phi, const rvec& aux) const {
        rvec x = lift_to_real(phi);
        x.insert(x.end(), aux.begin(), aux.end());
        return x;
    }

    void unpack(const rvec& x, cvec& phi, rvec& aux) const {
        phi = unlift_to_complex(rvec(x.begin(), x.begin() + 2 * n));
        aux.assign(x.begin() + 2 * n, x.end());
    }

    // splits QCQP duals into problem-constraint and disc multipliers
    void split_duals(const QcqpSolution& sol, EngineDuals& out) const {
        const std::size_t k = prob.constraints.size();
        out.constraint_duals.assign(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) out.constraint_duals[i] = sol.constraint_duals[i];
        out.disc_duals.assign(n, 0.0);
        if (disc)
            for (std::size_t e = 0; e < n; ++e) out.disc_duals[e] = sol.constraint_duals[k + e];
        out.aux_lower_duals.assign(prob.n_aux, 0.0);
        out.aux_upper_duals.assign(prob.n_aux, 0.0);
        for (std::size_t i = 0; i < prob.n_aux; ++i) {
            out.aux_lower_duals[i] = sol.lower_duals[2 * n + i];
            out.aux_upper_duals[i] = sol.upper_duals[2 * n + i];
        }
    }
};

cvec check_unit_init(const PhaseVector& phi0, std::size_t n) {
    if (phi0.phi.size() != n) throw invalid_input("engine: init phase vector has wrong length");
    return phi0.phi;
}

rvec check_aux_init(const rvec& aux0, std::size_t n_aux) {
    if (aux0.size() != n_aux) throw invalid_input("engine: init aux vector has wrong length");
    if (!all_finite(aux0)) throw invalid_input("engine: init aux vector not finite");
    return aux0;
}

double split_norm2(const cvec& a, const cvec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

double split_norm_inf(const cvec& a, const cvec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

double pdd_al_value(const PhaseProblem& prob, const cvec& phi, const rvec& aux, const cvec& psi,
                    double rho, const cvec& lambda) {
    double v = phase_objective(prob, aux);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const cplx d = phi[i] - psi[i];
        v += std::norm(d) / (2.0 * rho) + std::real(std::conj(lambda[i]) * d);
    }
    return v;
}

double admm_al_value(const PhaseProblem& prob, const cvec& phi, const rvec& aux, const cvec& psi,
                     const rvec& z1, const cvec& z2, double rho, bool nonlinear) {
    double v = phase_objective(prob, aux);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (nonlinear) {
            const double dm = std::abs(psi[i]) - 1.0 + z1[i] / rho;
            v += 0.5 * rho * dm * dm;
        }
        const cplx ds = psi[i] - phi[i] + z2[i] / rho;
        v += 0.5 * rho * std::norm(ds);
    }
    return v;
}

}  // namespace

void validate_phase_problem(const PhaseProblem& prob) {
    if (prob.n_elements == 0) throw invalid_input("phase problem: no phase elements");
    for (const auto& c : prob.constraints) {
        if (c.q.rows() != 0) check_hermitian_psd(c.q, prob.n_elements, "constraint quadratic");
        if (!c.q_lin.empty() && c.q_lin.size() != prob.n_elements)
            throw invalid_input("phase problem: constraint linear term has wrong length");
        if (!all_finite(c.q_lin) || !std::isfinite(c.d))
            throw invalid_input("phase problem: constraint has non-finite data");
        if (c.aux_quad.rows() != 0 &&
            (c.aux_quad.rows() != prob.n_aux || c.aux_quad.cols() != prob.n_aux))
            throw invalid_input("phase problem: constraint aux quadratic has wrong dimensions");
        if (!c.aux_lin.empty() && c.aux_lin.size() != prob.n_aux)
            throw invalid_input("phase problem: constraint aux linear term has wrong length");
        if (!all_finite(c.aux_lin)) throw invalid_input("phase problem: aux term not finite");
    }
    if (prob.aux_obj_quad.rows() != 0 &&
        (prob.aux_obj_quad.rows() != prob.n_aux || prob.aux_obj_quad.cols() != prob.n_aux))
        throw invalid_input("phase problem: aux objective quadratic has wrong dimensions");
    if (!prob.aux_obj_lin.empty() && prob.aux_obj_lin.size() != prob.n_aux)
        throw invalid_input("phase problem: aux objective linear term has wrong length");
    if (!prob.aux_lower.empty() && prob.aux_lower.size() != prob.n_aux)
        throw invalid_input("phase problem: aux lower bound length mismatch");
    if (!prob.aux_upper.empty() && prob.aux_upper.size() != prob.n_aux)
        throw invalid_input("phase problem: aux upper bound length mismatch");
}

double phase_constraint_value(const PhaseProblem& prob, std::size_t i, const cvec& phi,
                              const rvec& aux) {
    const auto& c = prob.constraints[i];
    double v = c.d;
    if (c.q.rows() == prob.n_elements) v += quad_form(c.q, phi);
    if (!c.q_lin.empty()) v += 2.0 * std::real(dot(c.q_lin, phi));
    if (c.aux_quad.rows() == prob.n_aux && prob.n_aux > 0) v += aux_quad_half(c.aux_quad, aux);
    if (!c.aux_lin.empty())
        for (std::size_t j = 0; j < prob.n_aux; ++j) v += c.aux_lin[j] * aux[j];
    return v;
}

double phase_objective(const PhaseProblem& prob, const rvec& aux) {
    double v = 0.0;
    if (prob.aux_obj_quad.rows() == prob.n_aux && prob.n_aux > 0)
        v += aux_quad_half(prob.aux_obj_quad, aux);
    if (!prob.aux_obj_lin.empty())
        for (std::size_t j = 0; j < prob.n_aux; ++j) v += prob.aux_obj_lin[j] * aux[j];
    return v;
}

double phase_max_constraint(const PhaseProblem& prob, const cvec& phi, const rvec& aux) {
    double v = -kInf;
    for (std::size_t i = 0; i < prob.constraints.size(); ++i)
        v = std::max(v, phase_constraint_value(prob, i, phi, aux));
    return v;
}

PhaseVector unit_circle_project(const cvec& v) {
    cvec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        out[i] = a == 0.0 ? cplx(1.0, 0.0) : v[i] / a;
    }
    return make_phase_vector(out);
}

cplx scalar_prox(cplx s, double t) {
    const double as = std::abs(s);
    if (as == 0.0) return t > 0.0 ? cplx(0.5 * t, 0.0) : cplx(0.0, 0.0);
    const cplx dir = s / as;

    auto g_of = [&](cplx psi) {
        return 2.0 * std::norm(psi) - 2.0 * std::real(std::conj(psi) * s) -
               2.0 * t * std::abs(psi);
    };

    // stationary moduli solve |2m - t| = |s|; each candidate must reproduce
    // its modulus through psi = s / (2 - t/m)
    bool found = false;
    cplx best(0.0, 0.0);
    double best_g = 0.0;  // g(0)
    for (const double m : {0.5 * (t + as), 0.5 * (t - as)}) {
        if (m <= 0.0) continue;
        const double denom = 2.0 - t / m;
        if (std::abs(denom) < 1e-14) continue;
        const cplx cand = s / denom;
        if (std::abs(std::abs(cand) - m) > 1e-9 * (1.0 + m)) continue;
        const double g = g_of(cand);
        if (!found || g < best_g) {
            best = cand;
            best_g = g;
            found = true;
        }
    }
    if (found) return best;

    // degenerate region near t = -|s|: refine along the aligned ray
    const double hi = 0.5 * t + as;
    if (hi <= 0.0) return cplx(0.0, 0.0);
    double bm = 0.0;
    double bg = 0.0;
    for (double m = 1e-4; m <= hi + 1e-12; m += 1e-4) {
        const double g = 2.0 * m * m - 2.0 * m * as - 2.0 * t * m;
        if (g < bg) {
            bg = g;
            bm = m;
        }
    }
    return bm * dir;
}

EngineResult pdd_solve(const PhaseProblem& prob, const PhaseVector& phi0, const rvec& aux0,
                       const PddConfig& cfg) {
    validate_phase_problem(prob);
    cvec phi = check_unit_init(phi0, prob.n_elements);
    rvec aux = check_aux_init(aux0, prob.n_aux);
    if (cfg.rho0 <= 0.0 || cfg.c <= 0.0 || cfg.c >= 1.0)
        throw invalid_input("pdd: invalid penalty schedule");

    Encoder enc(prob, cfg.include_disc_bound);
    const std::size_t n = prob.n_elements;
    cvec psi = phi;
    cvec lambda(n, cplx(0.0, 0.0));
    double rho = cfg.rho0;

    EngineResult res;
    bool have_duals = false;
    QcqpSolution last_sol;

    for (int k = 0; k < cfg.max_outer; ++k) {
        const double eta = cfg.eta0 * std::pow(cfg.eta_decay, double(k));

        double al_before = pdd_al_value(prob, phi, aux, psi, rho, lambda);
        for (int inner = 0; inner < cfg.max_inner; ++inner) {
            // phi block: proximal weight 1/rho, linear term lambda - psi/rho
            cvec a(n);
            for (std::size_t i = 0; i < n; ++i) a[i] = lambda[i] - psi[i] / rho;
            enc.set_phi_objective(1.0 / rho, a);
            const auto sol = qcqp_solve(enc.base, {}, enc.pack(phi, aux));
            ++res.qcqp_solves;
            if (sol.status == QcqpStatus::Infeasible)
                throw numeric_error("pdd: inner subproblem reported infeasible", 0);

            cvec phi_new;
            rvec aux_new;
            enc.unpack(sol.x, phi_new, aux_new);
            const double al_new = pdd_al_value(prob, phi_new, aux_new, psi, rho, lambda);
            double phi_change = 0.0;
            if (al_new <= al_before + 1e-12 * (1.0 + std::abs(al_before))) {
                phi_change = split_norm_inf(phi_new, phi);
                phi = std::move(phi_new);
                aux = std::move(aux_new);
                last_sol = sol;
                have_duals = true;
            }

            // psi block: exact minimizer of the augmented terms on the circle
            cvec shifted(n);
            for (std::size_t i = 0; i < n; ++i) shifted[i] = phi[i] + rho * lambda[i];
            psi = unit_circle_project(shifted).phi;

            const double al_after = pdd_al_value(prob, phi, aux, psi, rho, lambda);
            res.trace.push_back({k, inner, phase_objective(prob, aux), al_after,
                                 split_norm_inf(phi, psi), 0.0, rho, false});
            const bool settled =
                al_before - al_after <= cfg.inner_tol * (1.0 + std::abs(al_before)) ||
                phi_change <= 1e-7;
            al_before = al_after;
            if (settled) break;
        }

        res.outer_iters = k + 1;
        const double d2 = split_norm2(phi, psi);
        if (d2 <= cfg.outer_tol) {
            res.status = EngineStatus::Converged;
            break;
        }
        if (split_norm_inf(phi, psi) <= eta) {
            for (std::size_t i = 0; i < n; ++i) lambda[i] += (phi[i] - psi[i]) / rho;
            if (!res.trace.empty()) res.trace.back().dual_step = true;
        } else {
            rho *= cfg.c;
        }
    }

    // consistency passes: re-solve against the final splitting target and keep
    // whichever certified iterate scores the best first-order residual without
    // breaking the termination gap
    if (res.status == EngineStatus::Converged && have_duals) {
        auto score = [&](const QcqpSolution& sol, const cvec& cphi, const rvec& caux,
                         const cvec& cpsi) {
            EngineDuals d;
            enc.split_duals(sol, d);
            d.mu.resize(n);
            for (std::size_t i = 0; i < n; ++i) d.mu[i] = (cphi[i] - cpsi[i]) / rho + lambda[i];
            return kkt_residual_p8(cphi, cpsi, caux, d, prob);
        };
        cvec best_phi = phi, best_psi = psi;
        rvec best_aux = aux;
        QcqpSolution best_sol = last_sol;
        double best_r = score(last_sol, phi, aux, psi);
        for (int pass = 0; pass < 5; ++pass) {
            cvec a(n);
            for (std::size_t i = 0; i < n; ++i) a[i] = lambda[i] - psi[i] / rho;
            enc.set_phi_objective(1.0 / rho, a);
            const auto sol = qcqp_solve(enc.base, {}, enc.pack(phi, aux));
            ++res.qcqp_solves;
            if (sol.status == QcqpStatus::Infeasible)
                throw numeric_error("pdd: inner subproblem reported infeasible", 0);
            cvec phi_new;
            rvec aux_new;
            enc.unpack(sol.x, phi_new, aux_new);
            const double al_ref = pdd_al_value(prob, phi, aux, psi, rho, lambda);
            const double al_new = pdd_al_value(prob, phi_new, aux_new, psi, rho, lambda);
            if (al_new > al_ref + 1e-12 * (1.0 + std::abs(al_ref))) break;
            const double step = split_norm_inf(phi_new, phi);
            phi = std::move(phi_new);
            aux = std::move(aux_new);
            last_sol = sol;
            if (split_norm2(phi, psi) <= cfg.outer_tol) {
                const double r = score(last_sol, phi, aux, psi);
                if (r < best_r) {
                    best_r = r;
                    best_phi = phi;
                    best_aux = aux;
                    best_psi = psi;
                    best_sol = last_sol;
                }
            }
            if (step <= 1e-7 || pass == 4) break;
            cvec shifted(n);
            for (std::size_t i = 0; i < n; ++i) shifted[i] = phi[i] + rho * lambda[i];
            psi = unit_circle_project(shifted).phi;
            if (split_norm2(phi, psi) <= cfg.outer_tol) {
                const double r = score(last_sol, phi, aux, psi);
                if (r < best_r) {
                    best_r = r;
                    best_phi = phi;
                    best_aux = aux;
                    best_psi = psi;
                    best_sol = last_sol;
                }
            }
        }
        phi = best_phi;
        aux = best_aux;
        psi = best_psi;
        last_sol = best_sol;
    }

    res.phi = make_phase_vector(psi);
    res.phi_inner = phi;
    res.aux = aux;
    res.res_split = split_norm2(phi, psi);
    res.res_modulus = 0.0;
    if (have_duals) {
        enc.split_duals(last_sol, res.duals);
    } else {
        res.duals.constraint_duals.assign(prob.constraints.size(), 0.0);
        res.duals.disc_duals.assign(n, 0.0);
        res.duals.aux_lower_duals.assign(prob.n_aux, 0.0);
        res.duals.aux_upper_duals.assign(prob.n_aux, 0.0);
    }
    res.duals.mu.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.duals.mu[i] = (phi[i] - psi[i]) / rho + lambda[i];
    return res;
}

namespace {

EngineResult admm_impl(const PhaseProblem& prob, const PhaseVector& phi0, const rvec& aux0,
                       const NeAdmmConfig& cfg, bool nonlinear) {
    validate_phase_problem(prob);
    cvec phi = check_unit_init(phi0, prob.n_elements);
    rvec aux = check_aux_init(aux0, prob.n_aux);
    if (cfg.rho <= 0.0) throw invalid_input("admm: rho must be positive");

    Encoder enc(prob, false);
    const std::size_t n = prob.n_elements;
    const double rho = cfg.rho;
    cvec psi = phi;
    rvec z1(n, 0.0);
    cvec z2(n, cplx(0.0, 0.0));

    EngineResult res;
    bool have_duals = false;
    QcqpSolution last_sol;
    cvec mu(n, cplx(0.0, 0.0));

    for (int it = 0; it < cfg.max_iter; ++it) {
        // (aux, phi) block against the current splitting target
        cvec a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = -(rho * psi[i] + z2[i]);
        enc.set_phi_objective(rho, a);
        const auto sol = qcqp_solve(enc.base, {}, enc.pack(phi, aux));
        ++res.qcqp_solves;
        if (sol.status == QcqpStatus::Infeasible)
            throw numeric_error("admm: subproblem reported infeasible", 0);
        enc.unpack(sol.x, phi, aux);
        last_sol = sol;
        have_duals = true;
        for (std::size_t i = 0; i < n; ++i) mu[i] = rho * (phi[i] - psi[i]) - z2[i];

        // psi block
        if (nonlinear) {
            for (std::size_t i = 0; i < n; ++i)
                psi[i] = scalar_prox(phi[i] - z2[i] / rho, 1.0 - z1[i] / rho);
        } else {
            cvec target(n);
            for (std::size_t i = 0; i < n; ++i) target[i] = phi[i] - z2[i] / rho;
            psi = unit_circle_project(target).phi;
        }

        // dual ascent
        double res_mod = 0.0;
        if (nonlinear) {
            for (std::size_t i = 0; i < n; ++i) {
                const double dm = std::abs(psi[i]) - 1.0;
                z1[i] += rho * dm;
                res_mod += dm * dm;
            }
            res_mod = std::sqrt(res_mod);
        }
        for (std::size_t i = 0; i < n; ++i) z2[i] += rho * (psi[i] - phi[i]);

        const double res_split = split_norm2(psi, phi);
        res.trace.push_back({it, 0, phase_objective(prob, aux),
                             admm_al_value(prob, phi, aux, psi, z1, z2, rho, nonlinear),
                             res_split, res_mod, rho, false});
        res.outer_iters = it + 1;
        res.res_split = res_split;
        res.res_modulus = res_mod;
        if (res_split <= cfg.tol && res_mod <= cfg.tol) {
            res.status = EngineStatus::Converged;
            break;
        }
    }

    res.phi = unit_circle_project(psi);
    res.phi_inner = phi;
    res.aux = aux;
    if (have_duals) {
        enc.split_duals(last_sol, res.duals);
    } else {
        res.duals.constraint_duals.assign(prob.constraints.size(), 0.0);
        res.duals.disc_duals.assign(n, 0.0);
        res.duals.aux_lower_duals.assign(prob.n_aux, 0.0);
        res.duals.aux_upper_duals.assign(prob.n_aux, 0.0);
    }
    res.duals.mu = mu;
    return res;
}

}  // namespace

EngineResult neadmm_solve(const PhaseProblem& prob, const PhaseVector& phi0, const rvec& aux0,
                          const NeAdmmConfig& cfg) {
    return admm_impl(prob, phi0, aux0, cfg, true);
}

EngineResult stdadmm_solve(const PhaseProblem& prob, const PhaseVector& phi0, const rvec& aux0,
                           const NeAdmmConfig& cfg) {
    return admm_impl(prob, phi0, aux0, cfg, false);
}

double kkt_residual_p8(const cvec& phi, const cvec& psi, const rvec& aux,
                       const EngineDuals& duals, const PhaseProblem& prob) {
    validate_phase_problem(prob);
    const std::size_t n = prob.n_elements;
    const std::size_t kc = prob.constraints.size();
    if (phi.size() != n || psi.size() != n)
        throw invalid_input("kkt residual: phase vector length mismatch");
    if (aux.size() != prob.n_aux) throw invalid_input("kkt residual: aux length mismatch");

    auto dual_at = [](const rvec& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; };
    double r = 0.0;

    // stationarity in phi: mu/2 + sum nu_k (Q_k phi + q_k) + sigma_n phi_n = 0
    cvec st(n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n && i < duals.mu.size(); ++i) st[i] = 0.5 * duals.mu[i];
    for (std::size_t k = 0; k < kc; ++k) {
        const double nu = dual_at(duals.constraint_duals, k);
        if (nu == 0.0) continue;
        const auto& c = prob.constraints[k];
        if (c.q.rows() == n) {
            const cvec qp = mat_vec(c.q, phi);
            for (std::size_t i = 0; i < n; ++i) st[i] += nu * qp[i];
        }
        if (!c.q_lin.empty())
            for (std::size_t i = 0; i < n; ++i) st[i] += nu * c.q_lin[i];
    }
    for (std::size_t i = 0; i < n; ++i) st[i] += dual_at(duals.disc_duals, i) * phi[i];
    for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(st[i]));

    // stationarity in aux
    if (prob.n_aux > 0) {
        rvec sa(prob.n_aux, 0.0);
        if (prob.aux_obj_quad.rows() == prob.n_aux)
            for (std::size_t i = 0; i < prob.n_aux; ++i)
                for (std::size_t j = 0; j < prob.n_aux; ++j)
                    sa[i] += prob.aux_obj_quad(i, j) * aux[j];
        if (!prob.aux_obj_lin.empty())
            for (std::size_t i = 0; i < prob.n_aux; ++i) sa[i] += prob.aux_obj_lin[i];
        for (std::size_t k = 0; k < kc; ++k) {
            const double nu = dual_at(duals.constraint_duals, k);
            if (nu == 0.0) continue;
            const auto& c = prob.constraints[k];
            if (c.aux_quad.rows() == prob.n_aux)
                for (std::size_t i = 0; i < prob.n_aux; ++i)
                    for (std::size_t j = 0; j < prob.n_aux; ++j)
                        sa[i] += nu * c.aux_quad(i, j) * aux[j];
            if (!c.aux_lin.empty())
                for (std::size_t i = 0; i < prob.n_aux; ++i) sa[i] += nu * c.aux_lin[i];
        }
        for (std::size_t i = 0; i < prob.n_aux; ++i)
            sa[i] += dual_at(duals.aux_upper_duals, i) - dual_at(duals.aux_lower_duals, i);
        for (std::size_t i = 0; i < prob.n_aux; ++i) r = std::max(r, std::abs(sa[i]));
    }

    // mu must point radially at psi (the modulus multiplier is free in sign)
    for (std::size_t i = 0; i < n && i < duals.mu.size(); ++i) {
        const double ap = std::abs(psi[i]);
        if (ap == 0.0) {
            r = std::max(r, std::abs(duals.mu[i]));
            continue;
        }
        const cplx u = psi[i] / ap;
        const cplx tangential = duals.mu[i] - std::real(duals.mu[i] * std::conj(u)) * u;
        r = std::max(r, std::abs(tangential));
    }

    // primal feasibility: constraints, disc, aux box, split gap, psi modulus
    for (std::size_t k = 0; k < kc; ++k)
        r = std::max(r, std::max(0.0, phase_constraint_value(prob, k, phi, aux)));
    for (std::size_t i = 0; i < n; ++i)
        r = std::max(r, std::max(0.0, std::norm(phi[i]) - 1.0));
    for (std::size_t i = 0; i < prob.n_aux; ++i) {
        if (!prob.aux_lower.empty()) r = std::max(r, std::max(0.0, prob.aux_lower[i] - aux[i]));
        if (!prob.aux_upper.empty()) r = std::max(r, std::max(0.0, aux[i] - prob.aux_upper[i]));
    }
    for (std::size_t i = 0; i < n; ++i) {
        r = std::max(r, std::abs(phi[i] - psi[i]));
        r = std::max(r, std::abs(std::abs(psi[i]) - 1.0));
    }

    // complementary slackness and dual signs
    for (std::size_t k = 0; k < kc; ++k) {
        const double nu = dual_at(duals.constraint_duals, k);
        r = std::max(r, std::abs(nu * phase_constraint_value(prob, k, phi, aux)));
        r = std::max(r, std::max(0.0, -nu));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double sg = dual_at(duals.disc_duals, i);
        r = std::max(r, std::abs(sg * (std::norm(phi[i]) - 1.0)));
        r = std::max(r, std::max(0.0, -sg));
    }
    for (std::size_t i = 0; i < prob.n_aux; ++i) {
        const double lo = dual_at(duals.aux_lower_duals, i);
        const double up = dual_at(duals.aux_upper_duals, i);
        if (!prob.aux_lower.empty())
            r = std::max(r, std::abs(lo * (prob.aux_lower[i] - aux[i])));
        if (!prob.aux_upper.empty())
            r = std::max(r, std::abs(up * (aux[i] - prob.aux_upper[i])));
        r = std::max(r, std::max(0.0, -lo));
        r = std::max(r, std::max(0.0, -up));
    }
    return r;
}

EngineResult solve_phase_problem(const PhaseProblem& prob, const PhaseVector& phi0,
                                 const rvec& aux0, const PhaseEngineConfig& cfg) {
    switch (cfg.kind) {
        case PhaseEngine::Pdd:
            return pdd_solve(prob, phi0, aux0, cfg.pdd);
        case PhaseEngine::NeAdmm:
            return neadmm_solve(prob, phi0, aux0, cfg.admm);
        case PhaseEngine::StdAdmm:
            return stdadmm_solve(prob, phi0, aux0, cfg.admm);
    }
    throw invalid_input("solve_phase_problem: unknown engine");
}

}  // namespace irsopt
