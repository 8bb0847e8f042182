#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "irsopt/errors.hpp"
#include "irsopt/qcqp.hpp"
#include "irsopt/rng.hpp"

using namespace irsopt;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Test-side evaluation, written directly from the problem data so it never
// touches the solver's own helpers.
double t_obj(const ConvexQcqp& p, const rvec& x) {
    double v = 0.0;
    if (p.p.rows() == p.n)
        for (std::size_t i = 0; i < p.n; ++i)
            for (std::size_t j = 0; j < p.n; ++j) v += 0.5 * x[i] * p.p(i, j) * x[j];
    for (std::size_t i = 0; i < p.c.size(); ++i) v += p.c[i] * x[i];
    return v;
}

double t_cons(const ConvexQcqp& p, std::size_t k, const rvec& x) {
    const auto& c = p.constraints[k];
    double v = c.d;
    if (c.q.rows() == p.n)
        for (std::size_t i = 0; i < p.n; ++i)
            for (std::size_t j = 0; j < p.n; ++j) v += 0.5 * x[i] * c.q(i, j) * x[j];
    for (std::size_t i = 0; i < c.b.size(); ++i) v += c.b[i] * x[i];
    return v;
}

rvec t_obj_grad(const ConvexQcqp& p, const rvec& x) {
    rvec g(p.n, 0.0);
    if (p.p.rows() == p.n)
        for (std::size_t i = 0; i < p.n; ++i)
            for (std::size_t j = 0; j < p.n; ++j) g[i] += p.p(i, j) * x[j];
    for (std::size_t i = 0; i < p.c.size(); ++i) g[i] += p.c[i];
    return g;
}

rvec t_cons_grad(const ConvexQcqp& p, std::size_t k, const rvec& x) {
    const auto& c = p.constraints[k];
    rvec g(p.n, 0.0);
    if (c.q.rows() == p.n)
        for (std::size_t i = 0; i < p.n; ++i)
            for (std::size_t j = 0; j < p.n; ++j) g[i] += c.q(i, j) * x[j];
    for (std::size_t i = 0; i < c.b.size(); ++i) g[i] += c.b[i];
    return g;
}

// Quadratic-penalty oracle: damped Newton on f0 + C*sum max(0,f_i)^2 with the
// box folded into the same penalty, over an increasing penalty ladder.
rvec penalty_oracle(const ConvexQcqp& p, rvec x) {
    const std::size_t n = p.n;
    auto lower = [&](std::size_t j) {
        return p.lower.empty() ? -kInf : p.lower[j];
    };
    auto upper = [&](std::size_t j) { return p.upper.empty() ? kInf : p.upper[j]; };

    auto value = [&](double c_pen, const rvec& y) {
        double v = t_obj(p, y);
        for (std::size_t k = 0; k < p.constraints.size(); ++k) {
            const double f = t_cons(p, k, y);
            if (f > 0.0) v += c_pen * f * f;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (y[j] < lower(j)) v += c_pen * (lower(j) - y[j]) * (lower(j) - y[j]);
            if (y[j] > upper(j)) v += c_pen * (y[j] - upper(j)) * (y[j] - upper(j));
        }
        return v;
    };

    for (double c_pen : {1e4, 1e8, 1e12}) {
        for (int it = 0; it < 200; ++it) {
            rvec g = t_obj_grad(p, x);
            RealMatrix h(n, n);
            if (p.p.rows() == n)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) h(i, j) = p.p(i, j);
            for (std::size_t k = 0; k < p.constraints.size(); ++k) {
                const double f = t_cons(p, k, x);
                if (f <= 0.0) continue;
                const rvec gk = t_cons_grad(p, k, x);
                for (std::size_t i = 0; i < n; ++i) {
                    g[i] += 2.0 * c_pen * f * gk[i];
                    for (std::size_t j = 0; j < n; ++j) {
                        h(i, j) += 2.0 * c_pen * gk[i] * gk[j];
                        if (p.constraints[k].q.rows() == n)
                            h(i, j) += 2.0 * c_pen * f * p.constraints[k].q(i, j);
                    }
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (x[j] < lower(j)) {
                    g[j] += 2.0 * c_pen * (x[j] - lower(j));
                    h(j, j) += 2.0 * c_pen;
                }
                if (x[j] > upper(j)) {
                    g[j] += 2.0 * c_pen * (x[j] - upper(j));
                    h(j, j) += 2.0 * c_pen;
                }
            }
            double gnorm = 0.0;
            for (double v : g) gnorm = std::max(gnorm, std::abs(v));
            if (gnorm <= 1e-11 * (1.0 + c_pen * 1e-9)) break;

            double diag = 0.0;
            for (std::size_t j = 0; j < n; ++j) diag = std::max(diag, h(j, j));
            for (std::size_t j = 0; j < n; ++j) h(j, j) += 1e-12 * (1.0 + diag);
            rvec neg(n);
            for (std::size_t j = 0; j < n; ++j) neg[j] = -g[j];
            rvec dx = spd_solve(h, neg);

            const double f0 = value(c_pen, x);
            double gd = 0.0;
            for (std::size_t j = 0; j < n; ++j) gd += g[j] * dx[j];
            double t = 1.0;
            while (t > 1e-18) {
                rvec xt(n);
                for (std::size_t j = 0; j < n; ++j) xt[j] = x[j] + t * dx[j];
                if (value(c_pen, xt) <= f0 + 0.25 * t * gd) {
                    x = xt;
                    break;
                }
                t *= 0.5;
            }
            if (t <= 1e-18) break;
        }
    }
    return x;
}

RealMatrix diag_matrix(const rvec& d) {
    RealMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

// strongly convex random instance with a guaranteed interior point
ConvexQcqp random_instance(CounterRng& rng, std::size_t n, std::size_t m, bool with_box,
                           rvec* interior = nullptr) {
    ConvexQcqp p;
    p.n = n;
    RealMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.next_gaussian();
    p.p = RealMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n; ++k) v += a(k, i) * a(k, j);
            p.p(i, j) = v + (i == j ? 0.5 : 0.0);
        }
    p.c.resize(n);
    for (auto& v : p.c) v = rng.next_gaussian();

    rvec xhat(n);
    for (auto& v : xhat) v = rng.uniform(-1.0, 1.0);
    for (std::size_t k = 0; k < m; ++k) {
        QuadConstraint c;
        const bool quad = rng.next_double() < 0.75;
        double fx = 0.0;
        if (quad) {
            RealMatrix b(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.next_gaussian() * 0.5;
            c.q = RealMatrix(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double v = 0.0;
                    for (std::size_t l = 0; l < n; ++l) v += b(l, i) * b(l, j);
                    c.q(i, j) = v;
                }
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) fx += 0.5 * xhat[i] * c.q(i, j) * xhat[j];
        }
        c.b.resize(n);
        for (auto& v : c.b) v = rng.next_gaussian();
        for (std::size_t i = 0; i < n; ++i) fx += c.b[i] * xhat[i];
        c.d = -fx - rng.uniform(0.3, 1.5);
        p.constraints.push_back(std::move(c));
    }
    if (with_box) {
        p.lower.assign(n, -2.0);
        p.upper.assign(n, 2.0);
    }
    if (interior) *interior = xhat;
    return p;
}

}  // namespace

TEST_CASE("unconstrained quadratic solved exactly") {
    ConvexQcqp p;
    p.n = 2;
    p.p = diag_matrix({2.0, 2.0});
    p.c = {-2.0, -4.0};
    const auto sol = qcqp_solve(p);
    REQUIRE(sol.status == QcqpStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.x[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.objective == doctest::Approx(-5.0).epsilon(1e-9));
    CHECK(sol.kkt_residual <= 1e-8);
}

TEST_CASE("linear objective on a ball lands on the analytic boundary point") {
    ConvexQcqp p;
    p.n = 2;
    p.c = {1.0, 1.0};
    QuadConstraint ball;
    ball.q = diag_matrix({1.0, 1.0});
    ball.d = -0.5;
    p.constraints.push_back(ball);
    const auto sol = qcqp_solve(p);
    REQUIRE(sol.status == QcqpStatus::Optimal);
    const double r = -std::sqrt(0.5);
    CHECK(std::abs(sol.x[0] - r) <= 1e-6);
    CHECK(std::abs(sol.x[1] - r) <= 1e-6);
    CHECK(sol.objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
    // stationarity c + lambda * x = 0 gives lambda = sqrt(2)
    REQUIRE(sol.constraint_duals.size() == 1);
    CHECK(sol.constraint_duals[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-4));
}

TEST_CASE("active upper bound with matching multiplier") {
    ConvexQcqp p;
    p.n = 1;
    p.p = diag_matrix({1.0});
    p.c = {-3.0};
    p.upper = {1.0};
    const auto sol = qcqp_solve(p);
    REQUIRE(sol.status == QcqpStatus::Optimal);
    CHECK(std::abs(sol.x[0] - 1.0) <= 1e-6);
    CHECK(sol.upper_duals[0] == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(sol.lower_duals[0] <= 1e-6);
}

TEST_CASE("separable bound-constrained quadratics clip coordinatewise") {
    CounterRng rng(derive_seed(404, 1));
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + trial % 5;
        rvec d(n), t(n), lo(n), hi(n);
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = rng.uniform(0.5, 4.0);
            t[j] = rng.uniform(-3.0, 3.0);
            lo[j] = rng.uniform(-1.5, -0.5);
            hi[j] = rng.uniform(0.5, 1.5);
        }
        ConvexQcqp p;
        p.n = n;
        p.p = diag_matrix(d);
        p.c.resize(n);
        for (std::size_t j = 0; j < n; ++j) p.c[j] = -d[j] * t[j];
        p.lower = lo;
        p.upper = hi;
        const auto sol = qcqp_solve(p);
        REQUIRE(sol.status == QcqpStatus::Optimal);
        for (std::size_t j = 0; j < n; ++j) {
            const double expect = std::clamp(t[j], lo[j], hi[j]);
            CHECK(std::abs(sol.x[j] - expect) <= 1e-6);
        }
    }
}

TEST_CASE("random strongly convex instances match the penalty oracle") {
    CounterRng rng(derive_seed(404, 2));
    int boundary_free = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const std::size_t m = 1 + trial % 4;
        rvec xhat;
        const auto p = random_instance(rng, n, m, trial % 3 == 0, &xhat);
        const auto sol = qcqp_solve(p);
        REQUIRE(sol.status == QcqpStatus::Optimal);
        if (!sol.boundary_start) ++boundary_free;

        rvec x0(n, 0.0);
        const rvec xo = penalty_oracle(p, x0);
        const double fo = t_obj(p, xo);
        CHECK(std::abs(sol.objective - fo) <= 1e-6 * (1.0 + std::abs(fo)));
        for (std::size_t j = 0; j < n; ++j)
            CHECK(std::abs(sol.x[j] - xo[j]) <= 1e-4 * (1.0 + std::abs(xo[j])));

        // feasibility, dual signs, complementary slackness, stationarity
        CHECK(qcqp_max_violation(p, sol.x) <= 1e-7);
        rvec grad = t_obj_grad(p, sol.x);
        for (std::size_t k = 0; k < m; ++k) {
            REQUIRE(sol.constraint_duals[k] >= 0.0);
            const double fk = t_cons(p, k, sol.x);
            CHECK(std::abs(sol.constraint_duals[k] * fk) <= 2e-8);
            const rvec gk = t_cons_grad(p, k, sol.x);
            for (std::size_t j = 0; j < n; ++j) grad[j] += sol.constraint_duals[k] * gk[j];
        }
        if (!p.lower.empty())
            for (std::size_t j = 0; j < n; ++j)
                grad[j] += sol.upper_duals[j] - sol.lower_duals[j];
        double scale = 1.0;
        for (std::size_t j = 0; j < n; ++j) scale += std::abs(t_obj_grad(p, sol.x)[j]);
        for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(grad[j]) <= 1e-5 * scale);
        CHECK(sol.kkt_residual <= 1e-8);
    }
    CHECK(boundary_free == 30);  // all instances were built with real interiors
}

TEST_CASE("epigraph minimax of quadratic pieces matches the oracle") {
    CounterRng rng(derive_seed(404, 3));
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t nx = 2 + trial % 3;
        const std::size_t n = nx + 1;  // last coordinate is the epigraph level
        ConvexQcqp p;
        p.n = n;
        p.c.assign(n, 0.0);
        p.c[nx] = 1.0;
        for (int k = 0; k < 3; ++k) {
            QuadConstraint c;
            c.q = RealMatrix(n, n);
            for (std::size_t j = 0; j < nx; ++j) c.q(j, j) = 1.0;
            c.b.assign(n, 0.0);
            double sq = 0.0;
            for (std::size_t j = 0; j < nx; ++j) {
                const double aj = rng.uniform(-2.0, 2.0);
                c.b[j] = -aj;
                sq += aj * aj;
            }
            c.b[nx] = -1.0;
            c.d = 0.5 * sq;
            p.constraints.push_back(std::move(c));
        }
        const auto sol = qcqp_solve(p);
        REQUIRE(sol.status == QcqpStatus::Optimal);
        rvec x0(n, 0.0);
        x0[nx] = 50.0;
        const rvec xo = penalty_oracle(p, x0);
        CHECK(std::abs(sol.objective - t_obj(p, xo)) <= 1e-5 * (1.0 + std::abs(t_obj(p, xo))));
        for (std::size_t j = 0; j < nx; ++j) CHECK(std::abs(sol.x[j] - xo[j]) <= 2e-4);
    }
}

TEST_CASE("coordinate permutation permutes the solution") {
    CounterRng rng(derive_seed(404, 4));
    rvec xhat;
    const auto base = random_instance(rng, 4, 3, false, &xhat);
    const auto sol_base = qcqp_solve(base);
    REQUIRE(sol_base.status == QcqpStatus::Optimal);

    const std::vector<std::size_t> perm = {2, 0, 3, 1};  // new[i] = old[perm[i]]
    ConvexQcqp q;
    q.n = 4;
    q.p = RealMatrix(4, 4);
    q.c.resize(4);
    for (std::size_t i = 0; i < 4; ++i) {
        q.c[i] = base.c[perm[i]];
        for (std::size_t j = 0; j < 4; ++j) q.p(i, j) = base.p(perm[i], perm[j]);
    }
    for (const auto& c : base.constraints) {
        QuadConstraint pc;
        if (c.q.rows() == 4) {
            pc.q = RealMatrix(4, 4);
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 4; ++j) pc.q(i, j) = c.q(perm[i], perm[j]);
        }
        pc.b.resize(4);
        for (std::size_t i = 0; i < 4; ++i) pc.b[i] = c.b[perm[i]];
        pc.d = c.d;
        q.constraints.push_back(std::move(pc));
    }
    const auto sol_perm = qcqp_solve(q);
    REQUIRE(sol_perm.status == QcqpStatus::Optimal);
    CHECK(sol_perm.objective == doctest::Approx(sol_base.objective).epsilon(1e-7));
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(sol_perm.x[i] - sol_base.x[perm[i]]) <= 1e-6);
}

TEST_CASE("positively scaling a constraint leaves the solution, rescales its dual") {
    CounterRng rng(derive_seed(404, 5));
    rvec xhat;
    auto p = random_instance(rng, 3, 2, false, &xhat);
    const auto sol = qcqp_solve(p);
    REQUIRE(sol.status == QcqpStatus::Optimal);

    auto scaled = p;
    const double s = 5.0;
    auto& c = scaled.constraints[0];
    if (c.q.rows() == 3)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) c.q(i, j) *= s;
    for (auto& v : c.b) v *= s;
    c.d *= s;
    const auto sol_s = qcqp_solve(scaled);
    REQUIRE(sol_s.status == QcqpStatus::Optimal);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(sol_s.x[j] - sol.x[j]) <= 1e-6);
    if (sol.constraint_duals[0] > 1e-6)
        CHECK(sol_s.constraint_duals[0] * s ==
              doctest::Approx(sol.constraint_duals[0]).epsilon(1e-3));
}

TEST_CASE("infeasible instances are reported, not solved") {
    SUBCASE("quadratic with positive offset") {
        ConvexQcqp p;
        p.n = 1;
        p.p = diag_matrix({1.0});
        QuadConstraint c;
        c.q = diag_matrix({1.0});
        c.d = 1.0;  // x^2/2 + 1 <= 0 never holds
        p.constraints.push_back(c);
        const auto ph = qcqp_phase1(p);
        CHECK_FALSE(ph.strictly_feasible);
        CHECK_FALSE(ph.boundary);
        CHECK(ph.max_violation >= 0.9);
        CHECK(ph.max_violation <= 1.1);
        CHECK(qcqp_solve(p).status == QcqpStatus::Infeasible);
    }
    SUBCASE("contradictory affine pair") {
        ConvexQcqp p;
        p.n = 1;
        p.p = diag_matrix({1.0});
        QuadConstraint c1;
        c1.b = {1.0};
        c1.d = 1.0;  // x <= -1
        QuadConstraint c2;
        c2.b = {-1.0};
        c2.d = 1.0;  // x >= 1
        p.constraints = {c1, c2};
        CHECK(qcqp_solve(p).status == QcqpStatus::Infeasible);
    }
}

TEST_CASE("single-point feasible set is handled through a boundary start") {
    ConvexQcqp p;
    p.n = 1;
    p.p = diag_matrix({2.0});
    p.c = {-2.0};  // minimize (x-1)^2, but only x = 0 is feasible
    QuadConstraint c;
    c.q = diag_matrix({1.0});
    p.constraints.push_back(c);
    const auto sol = qcqp_solve(p);
    CHECK(sol.boundary_start);
    REQUIRE(sol.status == QcqpStatus::Optimal);
    CHECK(std::abs(sol.x[0]) <= 1e-3);
}

TEST_CASE("phase one solves the minimax slack problem") {
    ConvexQcqp p;
    p.n = 1;
    QuadConstraint c1;
    c1.b = {1.0};
    c1.d = 1.0;  // x <= -1
    QuadConstraint c2;
    c2.b = {-1.0};
    c2.d = -3.0;  // x >= -3
    p.constraints = {c1, c2};
    const auto ph = qcqp_phase1(p);
    CHECK(ph.strictly_feasible);
    CHECK(ph.max_violation == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(std::abs(ph.x0[0] + 2.0) <= 1e-2);
}

TEST_CASE("warm starts are honored and bad ones recovered") {
    CounterRng rng(derive_seed(404, 6));
    rvec xhat;
    const auto p = random_instance(rng, 3, 2, true, &xhat);
    const auto cold = qcqp_solve(p);
    REQUIRE(cold.status == QcqpStatus::Optimal);

    SUBCASE("strictly feasible start") {
        const auto warm = qcqp_solve(p, {}, xhat);
        REQUIRE(warm.status == QcqpStatus::Optimal);
        CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-7));
    }
    SUBCASE("infeasible start falls back to phase one") {
        const rvec far(3, 50.0);
        const auto warm = qcqp_solve(p, {}, far);
        REQUIRE(warm.status == QcqpStatus::Optimal);
        CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-7));
    }
    SUBCASE("wrong length start throws") {
        CHECK_THROWS_AS(qcqp_solve(p, {}, rvec(2, 0.0)), invalid_input);
    }
}

TEST_CASE("newton budget exhaustion reports an iteration limit") {
    ConvexQcqp p;
    p.n = 2;
    p.c = {1.0, 1.0};
    QuadConstraint ball;
    ball.q = diag_matrix({1.0, 1.0});
    ball.d = -0.5;
    p.constraints.push_back(ball);
    QcqpConfig cfg;
    cfg.max_newton = 2;
    const auto sol = qcqp_solve(p, cfg);
    CHECK(sol.status == QcqpStatus::IterationLimit);
}

TEST_CASE("malformed problems are rejected") {
    ConvexQcqp ok;
    ok.n = 2;
    ok.p = diag_matrix({1.0, 1.0});

    SUBCASE("indefinite objective") {
        auto p = ok;
        p.p(1, 1) = -1.0;
        CHECK_THROWS_AS(qcqp_solve(p), invalid_input);
    }
    SUBCASE("asymmetric constraint quadratic") {
        auto p = ok;
        QuadConstraint c;
        c.q = RealMatrix(2, 2);
        c.q(0, 1) = 1.0;
        c.d = -1.0;
        p.constraints.push_back(c);
        CHECK_THROWS_AS(qcqp_solve(p), invalid_input);
    }
    SUBCASE("wrong linear term length") {
        auto p = ok;
        QuadConstraint c;
        c.b = {1.0, 2.0, 3.0};
        c.d = -1.0;
        p.constraints.push_back(c);
        CHECK_THROWS_AS(qcqp_solve(p), invalid_input);
    }
    SUBCASE("non-finite data") {
        auto p = ok;
        p.c = {1.0, std::numeric_limits<double>::quiet_NaN()};
        CHECK_THROWS_AS(qcqp_solve(p), invalid_input);
    }
    SUBCASE("inverted box") {
        auto p = ok;
        p.lower = {0.0, 0.0};
        p.upper = {1.0, -1.0};
        CHECK_THROWS_AS(qcqp_solve(p), invalid_input);
    }
    SUBCASE("zero-width box") {
        auto p = ok;
        p.lower = {0.0, 1.0};
        p.upper = {1.0, 1.0};
        CHECK_THROWS_AS(qcqp_solve(p), invalid_input);
    }
    SUBCASE("empty problem") {
        ConvexQcqp p;
        p.n = 0;
        CHECK_THROWS_AS(qcqp_solve(p), invalid_input);
    }
}
