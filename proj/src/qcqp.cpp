#include "irsopt/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "irsopt/errors.hpp"

namespace irsopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBigM = 1e8;
constexpr double kStrictMargin = 1e-9;   // phase-1 slack for accepting strict feasibility
constexpr double kBoundaryBand = 1e-7;   // slack band treated as boundary-feasible

bool has_lower(const ConvexQcqp& p, std::size_t j) {
    return !p.lower.empty() && p.lower[j] > -kInf;
}
bool has_upper(const ConvexQcqp& p, std::size_t j) {
    return !p.upper.empty() && p.upper[j] < kInf;
}

// Coordinates a constraint actually touches; small supports keep the Newton
// assembly cheap for the many two-coordinate modulus constraints.
std::vector<std::size_t> constraint_support(const QuadConstraint& c, std::size_t n) {
    std::vector<bool> seen(n, false);
    if (c.q.rows() == n) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (c.q(i, j) != 0.0) seen[i] = seen[j] = true;
    }
    for (std::size_t i = 0; i < c.b.size(); ++i)
        if (c.b[i] != 0.0) seen[i] = true;
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
        if (seen[i]) s.push_back(i);
    return s;
}

struct Workspace {
    const ConvexQcqp& prob;
    std::vector<std::vector<std::size_t>> support;

    explicit Workspace(const ConvexQcqp& p) : prob(p) {
        support.reserve(p.constraints.size());
        for (const auto& c : p.constraints) support.push_back(constraint_support(c, p.n));
    }

    double cons_value(std::size_t i, const rvec& x) const {
        const auto& c = prob.constraints[i];
        double v = c.d;
        for (std::size_t a : support[i]) {
            if (!c.b.empty()) v += c.b[a] * x[a];
            if (c.q.rows() == prob.n) {
                double row = 0.0;
                for (std::size_t b : support[i]) row += c.q(a, b) * x[b];
                v += 0.5 * x[a] * row;
            }
        }
        return v;
    }

    // grad accumulated into a dense scratch vector restricted to the support
    void cons_grad(std::size_t i, const rvec& x, rvec& g) const {
        const auto& c = prob.constraints[i];
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t a : support[i]) {
            double v = c.b.empty() ? 0.0 : c.b[a];
            if (c.q.rows() == prob.n)
                for (std::size_t b : support[i]) v += c.q(a, b) * x[b];
            g[a] = v;
        }
    }

    bool strictly_feasible(const rvec& x) const {
        for (std::size_t j = 0; j < prob.n; ++j) {
            if (has_lower(prob, j) && !(x[j] > prob.lower[j])) return false;
            if (has_upper(prob, j) && !(x[j] < prob.upper[j])) return false;
        }
        for (std::size_t i = 0; i < prob.constraints.size(); ++i)
            if (!(cons_value(i, x) < 0.0)) return false;
        return true;
    }

    double objective(const rvec& x) const {
        double v = 0.0;
        if (prob.p.rows() == prob.n) {
            for (std::size_t i = 0; i < prob.n; ++i) {
                double row = 0.0;
                for (std::size_t j = 0; j < prob.n; ++j) row += prob.p(i, j) * x[j];
                v += 0.5 * x[i] * row;
            }
        }
        for (std::size_t i = 0; i < prob.c.size(); ++i) v += prob.c[i] * x[i];
        return v;
    }

    void objective_grad(const rvec& x, rvec& g) const {
        std::fill(g.begin(), g.end(), 0.0);
        if (prob.p.rows() == prob.n)
            for (std::size_t i = 0; i < prob.n; ++i)
                for (std::size_t j = 0; j < prob.n; ++j) g[i] += prob.p(i, j) * x[j];
        for (std::size_t i = 0; i < prob.c.size(); ++i) g[i] += prob.c[i];
    }

    std::size_t barrier_terms() const {
        std::size_t m = prob.constraints.size();
        for (std::size_t j = 0; j < prob.n; ++j) {
            if (has_lower(prob, j)) ++m;
            if (has_upper(prob, j)) ++m;
        }
        return m;
    }

    // Barrier value; +inf outside the strict interior.
    double barrier_value(double mu, const rvec& x) const {
        if (!strictly_feasible(x)) return kInf;
        double v = objective(x);
        for (std::size_t i = 0; i < prob.constraints.size(); ++i)
            v -= mu * std::log(-cons_value(i, x));
        for (std::size_t j = 0; j < prob.n; ++j) {
            if (has_lower(prob, j)) v -= mu * std::log(x[j] - prob.lower[j]);
            if (has_upper(prob, j)) v -= mu * std::log(prob.upper[j] - x[j]);
        }
        return v;
    }

    // Gradient and Hessian of the barrier at a strictly feasible x.
    void barrier_derivs(double mu, const rvec& x, rvec& g, RealMatrix& h) const {
        const std::size_t n = prob.n;
        objective_grad(x, g);
        h = RealMatrix(n, n);
        if (prob.p.rows() == n)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) h(i, j) = prob.p(i, j);

        rvec gi(n, 0.0);
        for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
            const double fi = cons_value(i, x);
            const double inv = 1.0 / (-fi);
            cons_grad(i, x, gi);
            const auto& sup = support[i];
            for (std::size_t a : sup) g[a] += mu * gi[a] * inv;
            const auto& c = prob.constraints[i];
            for (std::size_t a : sup)
                for (std::size_t b : sup) {
                    double hv = mu * gi[a] * gi[b] * inv * inv;
                    if (c.q.rows() == n) hv += mu * c.q(a, b) * inv;
                    h(a, b) += hv;
                }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (has_lower(prob, j)) {
                const double dj = x[j] - prob.lower[j];
                g[j] -= mu / dj;
                h(j, j) += mu / (dj * dj);
            }
            if (has_upper(prob, j)) {
                const double dj = prob.upper[j] - x[j];
                g[j] += mu / dj;
                h(j, j) += mu / (dj * dj);
            }
        }
    }
};

struct StageOutcome {
    int steps = 0;
    bool stalled = false;
    // relative Newton decrement at exit; certifies how well centered x is
    double final_dec_rel = kInf;
};

// Damped Newton descent on the barrier for a fixed weight mu.
StageOutcome newton_stage(const Workspace& ws, double mu, rvec& x, const QcqpConfig& cfg,
                          int budget, double rel_tol = 1e-12) {
    const std::size_t n = ws.prob.n;
    StageOutcome out;
    rvec g(n), dx(n), xt(n);
    RealMatrix h;

    for (int it = 0; it < cfg.max_stage_iters && out.steps < budget; ++it) {
        const double f = ws.barrier_value(mu, x);
        ws.barrier_derivs(mu, x, g, h);

        double diag_scale = 0.0;
        for (std::size_t j = 0; j < n; ++j) diag_scale = std::max(diag_scale, std::abs(h(j, j)));
        double ridge = 1e-12 * (1.0 + diag_scale);
        rvec neg(n);
        for (std::size_t j = 0; j < n; ++j) neg[j] = -g[j];
        bool solved = false;
        for (int attempt = 0; attempt < 4 && !solved; ++attempt) {
            RealMatrix hr = h;
            for (std::size_t j = 0; j < n; ++j) hr(j, j) += ridge;
            try {
                dx = spd_solve(hr, neg);
                solved = true;
            } catch (const numeric_error&) {
                ridge *= 1e4;
            }
        }
        if (!solved) {
            out.stalled = true;
            return out;
        }

        double gd = 0.0;
        for (std::size_t j = 0; j < n; ++j) gd += g[j] * dx[j];
        const double dec = -gd;
        out.final_dec_rel = dec * 0.5 / (1.0 + std::abs(f));
        if (dec * 0.5 <= rel_tol * (1.0 + std::abs(f))) return out;

        double t = 1.0;
        bool moved = false;
        while (t > 1e-20) {
            for (std::size_t j = 0; j < n; ++j) xt[j] = x[j] + t * dx[j];
            const double ft = ws.barrier_value(mu, xt);
            if (ft <= f + cfg.armijo_slope * t * gd) {
                x = xt;
                moved = true;
                break;
            }
            t *= cfg.backtrack;
        }
        ++out.steps;
        if (!moved) {
            out.stalled = true;
            return out;
        }
    }
    return out;
}

// Replace the barrier dual estimates with a nonnegative least-squares fit of
// the stationarity condition over the near-active set. The barrier formula
// mu/(-f) amplifies tiny positioning errors by 1/f; the fit only needs the
// well-conditioned constraint gradients, so the multipliers come out sharp.
void refine_duals(const Workspace& ws, const rvec& x, QcqpSolution& sol) {
    const ConvexQcqp& prob = ws.prob;
    const std::size_t n = prob.n;
    rvec target(n, 0.0);
    ws.objective_grad(x, target);
    for (auto& v : target) v = -v;

    double lam_max = 0.0;
    for (double l : sol.constraint_duals) lam_max = std::max(lam_max, l);
    for (double l : sol.lower_duals) lam_max = std::max(lam_max, l);
    for (double l : sol.upper_duals) lam_max = std::max(lam_max, l);
    const double thresh = 1e-7 * (1.0 + lam_max);

    enum class Kind { Cons, Lower, Upper };
    struct Col {
        Kind kind;
        std::size_t idx;
    };
    std::vector<Col> cols;
    std::vector<rvec> a;
    rvec gi(n, 0.0);
    for (std::size_t i = 0; i < prob.constraints.size(); ++i)
        if (sol.constraint_duals[i] > thresh) {
            ws.cons_grad(i, x, gi);
            cols.push_back({Kind::Cons, i});
            a.push_back(gi);
        }
    for (std::size_t j = 0; j < n; ++j) {
        if (has_lower(prob, j) && sol.lower_duals[j] > thresh) {
            rvec e(n, 0.0);
            e[j] = -1.0;
            cols.push_back({Kind::Lower, j});
            a.push_back(std::move(e));
        }
        if (has_upper(prob, j) && sol.upper_duals[j] > thresh) {
            rvec e(n, 0.0);
            e[j] = 1.0;
            cols.push_back({Kind::Upper, j});
            a.push_back(std::move(e));
        }
    }
    if (cols.empty()) return;

    std::vector<bool> keep(cols.size(), true);
    std::vector<double> fit(cols.size(), 0.0);
    for (int pass = 0; pass < 4; ++pass) {
        std::vector<std::size_t> kept;
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (keep[k]) kept.push_back(k);
        if (kept.empty()) return;  // fit failed; keep the barrier estimates

        const std::size_t k = kept.size();
        RealMatrix g(k, k);
        rvec rhs(k, 0.0);
        double tr = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c) {
                double v = 0.0;
                for (std::size_t j = 0; j < n; ++j) v += a[kept[r]][j] * a[kept[c]][j];
                g(r, c) = v;
            }
            tr += g(r, r);
            for (std::size_t j = 0; j < n; ++j) rhs[r] += a[kept[r]][j] * target[j];
        }
        for (std::size_t r = 0; r < k; ++r) g(r, r) += 1e-12 * (1.0 + tr / double(k));
        rvec y;
        try {
            y = spd_solve(g, rhs);
        } catch (const numeric_error&) {
            return;
        }
        bool clipped = false;
        for (std::size_t r = 0; r < k; ++r) {
            if (y[r] < 0.0) {
                keep[kept[r]] = false;
                clipped = true;
            } else {
                fit[kept[r]] = y[r];
            }
        }
        if (!clipped) {
            // inactive entries collapse to zero rather than mu/(-f) dust
            for (std::size_t i = 0; i < prob.constraints.size(); ++i)
                if (sol.constraint_duals[i] <= thresh) sol.constraint_duals[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (sol.lower_duals[j] <= thresh) sol.lower_duals[j] = 0.0;
                if (sol.upper_duals[j] <= thresh) sol.upper_duals[j] = 0.0;
            }
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const double v = keep[c] ? fit[c] : 0.0;
                switch (cols[c].kind) {
                    case Kind::Cons: sol.constraint_duals[cols[c].idx] = v; break;
                    case Kind::Lower: sol.lower_duals[cols[c].idx] = v; break;
                    case Kind::Upper: sol.upper_duals[cols[c].idx] = v; break;
                }
            }
            return;
        }
    }
}

// Extended problem for phase 1: variables (x, s), minimize s with every
// constraint relaxed by -s and s confined to a big-M box.
ConvexQcqp extend_phase1(const ConvexQcqp& prob, double s_bound) {
    ConvexQcqp ext;
    ext.n = prob.n + 1;
    ext.c.assign(ext.n, 0.0);
    ext.c[prob.n] = 1.0;
    for (const auto& c : prob.constraints) {
        QuadConstraint ec;
        if (c.q.rows() == prob.n) {
            ec.q = RealMatrix(ext.n, ext.n);
            for (std::size_t i = 0; i < prob.n; ++i)
                for (std::size_t j = 0; j < prob.n; ++j) ec.q(i, j) = c.q(i, j);
        }
        ec.b.assign(ext.n, 0.0);
        for (std::size_t i = 0; i < c.b.size(); ++i) ec.b[i] = c.b[i];
        ec.b[prob.n] = -1.0;
        ec.d = c.d;
        ext.constraints.push_back(std::move(ec));
    }
    ext.lower.assign(ext.n, -kInf);
    ext.upper.assign(ext.n, kInf);
    for (std::size_t j = 0; j < prob.n; ++j) {
        if (has_lower(prob, j)) ext.lower[j] = prob.lower[j];
        if (has_upper(prob, j)) ext.upper[j] = prob.upper[j];
    }
    ext.lower[prob.n] = -s_bound;
    ext.upper[prob.n] = s_bound;
    return ext;
}

// A point safely inside the box bounds (constraints not considered).
rvec box_interior_point(const ConvexQcqp& prob) {
    rvec x(prob.n, 0.0);
    for (std::size_t j = 0; j < prob.n; ++j) {
        const bool lo = has_lower(prob, j), up = has_upper(prob, j);
        if (lo && up)
            x[j] = 0.5 * (prob.lower[j] + prob.upper[j]);
        else if (lo)
            x[j] = std::max(0.0, prob.lower[j]) + 1.0 + std::abs(prob.lower[j]);
        else if (up)
            x[j] = std::min(0.0, prob.upper[j]) - 1.0 - std::abs(prob.upper[j]);
    }
    return x;
}

Phase1Result run_phase1(const ConvexQcqp& prob, const QcqpConfig& cfg, bool early_exit) {
    if (prob.constraints.empty()) {
        Phase1Result r;
        r.x0 = box_interior_point(prob);
        r.max_violation = -kInf;
        r.strictly_feasible = true;
        return r;
    }

    Workspace ws_orig(prob);
    rvec x0_box = box_interior_point(prob);
    double worst = -kInf;
    for (std::size_t i = 0; i < prob.constraints.size(); ++i)
        worst = std::max(worst, ws_orig.cons_value(i, x0_box));

    const double s_bound = std::max(kBigM, 10.0 * std::abs(worst) + 10.0);
    const ConvexQcqp ext = extend_phase1(prob, s_bound);
    Workspace ws(ext);

    rvec x = x0_box;
    x.push_back(worst + std::max(1.0, 0.1 * std::abs(worst)));

    Phase1Result res;
    double mu = cfg.mu0;
    const std::size_t m = ws.barrier_terms();
    rvec center;
    bool have_center = false;

    while (true) {
        const auto st = newton_stage(ws, mu, x, cfg, cfg.max_newton - res.newton_steps);
        res.newton_steps += st.steps;
        if (!have_center) {
            center = x;
            have_center = true;
        }
        if (early_exit) {
            rvec xo(x.begin(), x.begin() + prob.n);
            double viol = -kInf;
            for (std::size_t i = 0; i < prob.constraints.size(); ++i)
                viol = std::max(viol, ws_orig.cons_value(i, xo));
            if (viol <= -1e-6) {
                res.x0 = xo;
                res.max_violation = viol;
                res.strictly_feasible = true;
                return res;
            }
        }
        if (double(m) * mu <= std::min(cfg.tol, 1e-10) || st.stalled ||
            res.newton_steps >= cfg.max_newton)
            break;
        mu *= cfg.mu_shrink;
    }

    res.x0.assign(x.begin(), x.begin() + prob.n);
    // report the actual worst constraint value rather than the slack iterate
    {
        double viol = -kInf;
        for (std::size_t i = 0; i < prob.constraints.size(); ++i)
            viol = std::max(viol, ws_orig.cons_value(i, res.x0));
        res.max_violation = viol;
    }
    res.strictly_feasible = res.max_violation <= -kStrictMargin;
    res.boundary =
        !res.strictly_feasible && res.max_violation <= kBoundaryBand;
    if (res.boundary && have_center) {
        // nudge the returned point most of the way toward the analytic center
        rvec mixed(prob.n);
        for (std::size_t j = 0; j < prob.n; ++j)
            mixed[j] = 0.99 * center[j] + 0.01 * res.x0[j];
        res.x0 = mixed;
    }
    return res;
}

}  // namespace

void qcqp_validate(const ConvexQcqp& prob) {
    if (prob.n == 0) throw invalid_input("qcqp: empty problem");
    auto check_quad = [&](const RealMatrix& q, const char* what) {
        if (q.rows() == 0) return;
        if (q.rows() != prob.n || q.cols() != prob.n)
            throw invalid_input(std::string("qcqp: ") + what + " has wrong dimensions");
        double norm_f = 0.0, asym = 0.0;
        for (std::size_t i = 0; i < prob.n; ++i)
            for (std::size_t j = 0; j < prob.n; ++j) {
                if (!std::isfinite(q(i, j)))
                    throw invalid_input(std::string("qcqp: ") + what + " has non-finite entries");
                norm_f += q(i, j) * q(i, j);
                asym = std::max(asym, std::abs(q(i, j) - q(j, i)));
            }
        norm_f = std::sqrt(norm_f);
        if (asym > 1e-10 * (1.0 + norm_f))
            throw invalid_input(std::string("qcqp: ") + what + " is not symmetric");
        if (!spd_factorizable(q, 1e-9 * norm_f + 1e-30))
            throw invalid_input(std::string("qcqp: ") + what + " is not positive semidefinite");
    };
    check_quad(prob.p, "objective quadratic");
    if (!prob.c.empty() && prob.c.size() != prob.n)
        throw invalid_input("qcqp: objective linear term has wrong length");
    if (!all_finite(prob.c)) throw invalid_input("qcqp: objective linear term not finite");
    for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
        const auto& c = prob.constraints[i];
        check_quad(c.q, "constraint quadratic");
        if (!c.b.empty() && c.b.size() != prob.n)
            throw invalid_input("qcqp: constraint linear term has wrong length");
        if (!all_finite(c.b) || !std::isfinite(c.d))
            throw invalid_input("qcqp: constraint has non-finite data");
    }
    if (!prob.lower.empty() && prob.lower.size() != prob.n)
        throw invalid_input("qcqp: lower bound length mismatch");
    if (!prob.upper.empty() && prob.upper.size() != prob.n)
        throw invalid_input("qcqp: upper bound length mismatch");
    for (std::size_t j = 0; j < prob.n; ++j)
        if (has_lower(prob, j) && has_upper(prob, j) && !(prob.lower[j] < prob.upper[j]))
            throw invalid_input("qcqp: box has no interior; eliminate pinned variables");
}

double qcqp_objective(const ConvexQcqp& prob, const rvec& x) { return Workspace(prob).objective(x); }

double qcqp_constraint_value(const ConvexQcqp& prob, std::size_t i, const rvec& x) {
    return Workspace(prob).cons_value(i, x);
}

double qcqp_max_violation(const ConvexQcqp& prob, const rvec& x) {
    Workspace ws(prob);
    double v = 0.0;
    for (std::size_t i = 0; i < prob.constraints.size(); ++i)
        v = std::max(v, ws.cons_value(i, x));
    for (std::size_t j = 0; j < prob.n; ++j) {
        if (has_lower(prob, j)) v = std::max(v, prob.lower[j] - x[j]);
        if (has_upper(prob, j)) v = std::max(v, x[j] - prob.upper[j]);
    }
    return v;
}

Phase1Result qcqp_phase1(const ConvexQcqp& prob, const QcqpConfig& cfg) {
    qcqp_validate(prob);
    return run_phase1(prob, cfg, false);
}

QcqpSolution qcqp_solve(const ConvexQcqp& prob, const QcqpConfig& cfg,
                        const std::optional<rvec>& x0) {
    qcqp_validate(prob);

    QcqpSolution sol;
    ConvexQcqp work = prob;  // may get a tiny boundary relaxation
    rvec x;
    bool have_start = false;

    if (x0) {
        if (x0->size() != prob.n) throw invalid_input("qcqp: starting point has wrong length");
        if (!all_finite(*x0)) throw invalid_input("qcqp: starting point not finite");
        x = *x0;
        // pull strictly inside the box, then require strict constraint feasibility
        for (std::size_t j = 0; j < prob.n; ++j) {
            if (has_lower(prob, j) && has_upper(prob, j)) {
                const double w = prob.upper[j] - prob.lower[j];
                const double pad = std::min(0.25 * w, 1e-9 * (1.0 + std::abs(prob.lower[j]) +
                                                              std::abs(prob.upper[j])));
                x[j] = std::clamp(x[j], prob.lower[j] + pad, prob.upper[j] - pad);
            } else if (has_lower(prob, j)) {
                x[j] = std::max(x[j], prob.lower[j] + 1e-9 * (1.0 + std::abs(prob.lower[j])));
            } else if (has_upper(prob, j)) {
                x[j] = std::min(x[j], prob.upper[j] - 1e-9 * (1.0 + std::abs(prob.upper[j])));
            }
        }
        Workspace probe(prob);
        bool ok = true;
        for (std::size_t i = 0; i < prob.constraints.size() && ok; ++i)
            if (!(probe.cons_value(i, x) < -1e-12)) ok = false;
        have_start = ok;
    }

    if (!have_start) {
        const Phase1Result p1 = run_phase1(prob, cfg, true);
        sol.newton_steps += p1.newton_steps;
        if (p1.strictly_feasible) {
            x = p1.x0;
        } else if (p1.boundary) {
            // relax every constraint just enough to open an interior
            const double relax = std::max(p1.max_violation, 0.0) + kStrictMargin;
            for (auto& c : work.constraints) c.d -= relax;
            x = p1.x0;
            sol.boundary_start = true;
            Workspace probe(work);
            if (!probe.strictly_feasible(x)) {
                sol.status = QcqpStatus::Infeasible;
                sol.x = p1.x0;
                sol.objective = qcqp_objective(prob, p1.x0);
                sol.kkt_residual = p1.max_violation;
                return sol;
            }
        } else {
            sol.status = QcqpStatus::Infeasible;
            sol.x = p1.x0;
            sol.objective = qcqp_objective(prob, p1.x0);
            sol.kkt_residual = p1.max_violation;
            return sol;
        }
    }

    Workspace ws(work);
    const std::size_t m = ws.barrier_terms();
    double mu = cfg.mu0;
    bool hit_limit = false;
    double dec_rel = kInf;

    if (m == 0) {
        const auto st =
            newton_stage(ws, 0.0, x, cfg, cfg.max_newton - sol.newton_steps, 1e-16);
        sol.newton_steps += st.steps;
        dec_rel = st.final_dec_rel;
        mu = 0.0;
        hit_limit = sol.newton_steps >= cfg.max_newton;
    } else {
        bool centered = false;
        for (int stage = 0; stage < 80; ++stage) {
            const auto st = newton_stage(ws, mu, x, cfg, cfg.max_newton - sol.newton_steps);
            sol.newton_steps += st.steps;
            dec_rel = st.final_dec_rel;
            if (double(m) * mu <= cfg.tol) {
                centered = true;
                break;
            }
            if (sol.newton_steps >= cfg.max_newton) break;
            mu *= cfg.mu_shrink;
        }
        if (!centered) hit_limit = true;
    }

    // dual estimates from the barrier weights at the final iterate
    const std::size_t n = prob.n;
    sol.constraint_duals.assign(work.constraints.size(), 0.0);
    for (std::size_t i = 0; i < work.constraints.size(); ++i) {
        const double fi = ws.cons_value(i, x);
        sol.constraint_duals[i] = fi < 0.0 ? mu / (-fi) : 0.0;
    }
    sol.lower_duals.assign(n, 0.0);
    sol.upper_duals.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (has_lower(work, j)) sol.lower_duals[j] = mu / (x[j] - work.lower[j]);
        if (has_upper(work, j)) sol.upper_duals[j] = mu / (work.upper[j] - x[j]);
    }
    refine_duals(ws, x, sol);

    sol.x = x;
    sol.objective = ws.objective(x);
    // certificate of the problem actually solved: duality-gap bound from the
    // barrier weight, feasibility, and how well centered the iterate is;
    // a boundary start solves a copy relaxed by at most the boundary band
    const double viol_solved = qcqp_max_violation(work, x);
    sol.kkt_residual = std::max({double(m) * mu, viol_solved, dec_rel});

    const double viol_orig = qcqp_max_violation(prob, x);
    const double viol_cap = sol.boundary_start ? 2.0 * kBoundaryBand : kBoundaryBand;
    if (hit_limit || viol_orig > viol_cap || sol.kkt_residual > cfg.tol)
        sol.status = QcqpStatus::IterationLimit;
    else
        sol.status = QcqpStatus::Optimal;
    return sol;
}

}  // namespace irsopt
