#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "irsopt/channel.hpp"
#include "irsopt/errors.hpp"
#include "irsopt/feasibility.hpp"
#include "irsopt/phase_engines.hpp"
#include "irsopt/qcqp.hpp"
#include "irsopt/rng.hpp"

using namespace irsopt;

namespace {

constexpr double kTau = 6.283185307179586476925287;

ScenarioConfig small_scenario(std::uint64_t seed, int m, int k, int n) {
    ScenarioConfig cfg;
    cfg.m_antennas = m;
    cfg.k_users = k;
    cfg.n_elements = n;
    cfg.rng_seed = seed;
    return cfg;
}

cvec random_cvec(std::size_t n, CounterRng& rng) {
    cvec v(n);
    for (auto& z : v) z = rng.next_cnormal();
    return v;
}

// receivers near the optimal ones but deliberately off them
std::vector<cvec> jittered_receivers(const ChannelSet& ch, const PhaseVector& phi,
                                     const PowerVector& q, CounterRng& rng) {
    std::vector<cvec> w = mmse_receivers(ch, phi, q);
    for (auto& wk : w) {
        const double s = 0.3 * norm2(wk);
        for (auto& z : wk) z += s * rng.next_cnormal();
    }
    return w;
}

double worst_scaled_error(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q,
                          const std::vector<cvec>& w, const std::vector<double>& rates) {
    double a = -1e300;
    for (std::size_t k = 0; k < w.size(); ++k)
        a = std::max(a, (1.0 + rates[k]) * mse(ch, phi, q, w[k], static_cast<int>(k)));
    return a;
}

}  // namespace

TEST_CASE("power block matches the single user calculus optimum") {
    ChannelSet ch;
    ch.g = ComplexMatrix(1, 1);
    ch.h_r = ComplexMatrix(1, 1);
    ch.h_d = ComplexMatrix(1, 1);
    ch.h_d(0, 0) = 1.0;
    ch.noise_power_mw = 1.0;
    const PhaseVector phi = make_phase_vector({cplx{1.0, 0.0}});
    const std::vector<cvec> w = {{cplx{1.0, 0.0}}};

    const ConvexQcqp p6 = assemble_p6(ch, phi, w, {1.0}, {4.0});
    REQUIRE(p6.n == 2);
    REQUIRE(p6.constraints.size() == 1);
    CHECK(p6.constraints[0].q(0, 0) == doctest::Approx(4.0));
    CHECK(p6.constraints[0].b[0] == doctest::Approx(-4.0));
    CHECK(p6.constraints[0].b[1] == doctest::Approx(-1.0));
    CHECK(p6.constraints[0].d == doctest::Approx(4.0));
    CHECK(p6.lower[0] == 0.0);
    CHECK(p6.upper[0] == doctest::Approx(2.0));

    const QcqpSolution sol = qcqp_solve(p6);
    REQUIRE(sol.status == QcqpStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(sol.x[1] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("power block constraints equal the scaled detection error") {
    for (std::uint64_t seed : {11, 12, 13}) {
        const ChannelSet ch = generate_channels(small_scenario(seed, 3, 3, 4));
        CounterRng rng(derive_seed(seed, 77, 0));
        const PhaseVector phi = random_phase_vector(4, rng);
        std::vector<double> draw(3);
        for (auto& v : draw) v = rng.uniform(0.5, 10.0);
        const std::vector<cvec> w = jittered_receivers(ch, phi, make_power_vector(draw), rng);
        const std::vector<double> rates =
            seed == 13 ? std::vector<double>{0.0, 0.0, 0.0} : std::vector<double>{0.7, 1.9, 3.2};
        const std::vector<double> pmax = {10.0, 10.0, 10.0};

        const ConvexQcqp p6 = assemble_p6(ch, phi, w, rates, pmax);
        REQUIRE(p6.n == 4);
        REQUIRE(p6.constraints.size() == 3);
        for (int rep = 0; rep < 5; ++rep) {
            rvec x(4);
            std::vector<double> q(3);
            for (std::size_t k = 0; k < 3; ++k) {
                x[k] = rng.uniform(0.0, std::sqrt(pmax[k]));
                q[k] = x[k] * x[k];
            }
            x[3] = rng.uniform(-2.0, 2.0);
            const PowerVector qv = make_power_vector(q);
            for (std::size_t k = 0; k < 3; ++k) {
                const double want =
                    (1.0 + rates[k]) * mse(ch, phi, qv, w[k], static_cast<int>(k)) - x[3];
                const double got = qcqp_constraint_value(p6, k, x);
                CHECK(std::abs(got - want) <= 1e-10 * (1.0 + std::abs(want)));
            }
        }
    }
}

TEST_CASE("phase block constraints equal the scaled detection error for any phases") {
    for (std::uint64_t seed : {21, 22}) {
        const ChannelSet ch = generate_channels(small_scenario(seed, 3, 3, 4));
        CounterRng rng(derive_seed(seed, 78, 0));
        std::vector<double> draw(3);
        for (auto& v : draw) v = rng.uniform(0.5, 10.0);
        const PowerVector q = make_power_vector(draw);
        const std::vector<cvec> w = jittered_receivers(ch, random_phase_vector(4, rng), q, rng);
        const std::vector<double> rates = {0.5, 2.0, 4.0};

        const PhaseProblem p8 = assemble_p8(ch, q, w, rates);
        REQUIRE(p8.n_elements == 4);
        REQUIRE(p8.n_aux == 1);
        REQUIRE(p8.constraints.size() == 3);
        REQUIRE(p8.aux_obj_lin == rvec{1.0});
        for (int rep = 0; rep < 20; ++rep) {
            const PhaseVector ph = random_phase_vector(4, rng);
            const rvec aux = {rng.uniform(-1.0, 3.0)};
            for (std::size_t k = 0; k < 3; ++k) {
                const double want =
                    (1.0 + rates[k]) * mse(ch, ph, q, w[k], static_cast<int>(k)) - aux[0];
                const double got = phase_constraint_value(p8, k, ph.phi, aux);
                CHECK(std::abs(got - want) <= 1e-10 * (1.0 + std::abs(want)));
            }
        }
    }
}

TEST_CASE("phase block drops quadratic terms when the surface is disconnected") {
    const std::uint64_t seed = 31;
    ChannelSet ch = generate_channels(small_scenario(seed, 2, 2, 3));
    ch.h_r = ComplexMatrix(3, 2);
    CounterRng rng(derive_seed(seed, 79, 0));
    const PowerVector q = make_power_vector({2.0, 3.0});
    const std::vector<cvec> w = {random_cvec(2, rng), random_cvec(2, rng)};
    const std::vector<double> rates = {1.0, 0.0};

    const PhaseProblem p8 = assemble_p8(ch, q, w, rates);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(p8.constraints[k].q.rows() == 0);
        CHECK(p8.constraints[k].q_lin.empty());
        CHECK(p8.constraints[k].aux_lin == rvec{-1.0});
        const PhaseVector pa = random_phase_vector(3, rng);
        const PhaseVector pb = random_phase_vector(3, rng);
        const double va = phase_constraint_value(p8, k, pa.phi, {0.25});
        const double vb = phase_constraint_value(p8, k, pb.phi, {0.25});
        CHECK(va == doctest::Approx(vb));
        const double want = (1.0 + rates[k]) * mse(ch, pa, q, w[k], static_cast<int>(k)) - 0.25;
        CHECK(std::abs(va - want) <= 1e-10 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("phase block single element optimum sits at the grid minimizer") {
    const ChannelSet ch = generate_channels(small_scenario(41, 2, 1, 1));
    CounterRng rng(derive_seed(41, 80, 0));
    const PowerVector q = make_power_vector({7.0});
    const std::vector<cvec> w = mmse_receivers(ch, random_phase_vector(1, rng), q);

    const PhaseProblem p8 = assemble_p8(ch, q, w, {1.5});
    REQUIRE(p8.constraints.size() == 1);
    REQUIRE(!p8.constraints[0].q_lin.empty());
    const cplx c = p8.constraints[0].q_lin[0];
    REQUIRE(std::abs(c) > 1e-16);
    const cplx closed = -c / std::abs(c);

    double best = 1e300;
    cplx best_phi = 1.0;
    for (int i = 0; i < 10000; ++i) {
        const double th = kTau * i / 10000.0;
        const cplx z{std::cos(th), std::sin(th)};
        const double v = mse(ch, make_phase_vector({z}), q, w[0], 0);
        if (v < best) {
            best = v;
            best_phi = z;
        }
    }
    CHECK(std::abs(closed - best_phi) <= 1e-3);
}

TEST_CASE("feasibility reports success immediately for zero targets") {
    const ChannelSet ch = generate_channels(small_scenario(51, 2, 2, 2));
    FeasibilityConfig fc;
    fc.rng_seed = 51;
    const FeasibilityReport rep = check_feasibility(ch, {0.0, 0.0}, {10.0, 10.0}, fc);
    CHECK(rep.feasible);
    CHECK(rep.outer_iterations == 1);
    CHECK(rep.alpha <= 1.0);
    CHECK(rep.alpha > 0.0);
    CHECK(rep.alpha_trace.size() == 1);
    CHECK(rep.qcqp_solves == 0);
    REQUIRE(rep.receivers.size() == 2);
    REQUIRE(rep.q.q.size() == 2);
    for (double v : rep.q.q) CHECK(v <= 10.0 + 1e-9);
    REQUIRE(rep.phi.phi.size() == 2);
    for (const auto& z : rep.phi.phi) CHECK(std::abs(z) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single user below the best achievable ratio is detected feasible") {
    const ChannelSet ch = generate_channels(small_scenario(61, 2, 1, 2));
    const double pmax = 10.0;
    double best = 0.0;
    for (int a = 0; a < 64; ++a)
        for (int b = 0; b < 64; ++b) {
            const cplx za{std::cos(kTau * a / 64.0), std::sin(kTau * a / 64.0)};
            const cplx zb{std::cos(kTau * b / 64.0), std::sin(kTau * b / 64.0)};
            best = std::max(
                best, sinr_optimal(ch, make_phase_vector({za, zb}), make_power_vector({pmax}), 0));
        }
    REQUIRE(best > 0.0);
    const double target = 0.5 * best;

    FeasibilityConfig fc;
    fc.rng_seed = 61;
    const FeasibilityReport rep = check_feasibility(ch, {target}, {pmax}, fc);
    CHECK(rep.feasible);
    CHECK(rep.q.q[0] <= pmax * (1.0 + 1e-9));
    CHECK(sinr_optimal(ch, rep.phi, rep.q, 0) >= target * (1.0 - 1e-6));
}

TEST_CASE("channels shaped for guaranteed service pass the check at large budgets") {
    for (std::uint64_t seed : {71, 72, 73}) {
        ChannelSet ch = generate_channels(small_scenario(seed, 4, 4, 4));
        const SvdExtremes sd = svd_extremes(ch.h_d);
        REQUIRE(sd.nonzero_count == 4);
        const double lhs = svd_extremes(ch.g).sigma_max * svd_extremes(ch.h_r).sigma_max;
        if (lhs >= sd.sigma_min_nonzero) {
            const double f = 0.5 * sd.sigma_min_nonzero / lhs;
            for (auto& z : ch.h_r.data()) z *= f;
        }
        REQUIRE(lemma1_condition(ch));

        FeasibilityConfig fc;
        fc.rng_seed = seed;
        const FeasibilityReport rep =
            check_feasibility(ch, std::vector<double>(4, 100.0), std::vector<double>(4, 1e6), fc);
        CHECK(rep.feasible);
        for (int k = 0; k < 4; ++k)
            CHECK(sinr_optimal(ch, rep.phi, rep.q, k) >= 100.0 * (1.0 - 1e-6));
    }
}

TEST_CASE("the worst scaled error never rises along the search") {
    for (std::uint64_t seed : {81, 82, 83, 84}) {
        const ChannelSet ch = generate_channels(small_scenario(seed, 4, 3, 8));
        FeasibilityConfig fc;
        fc.rng_seed = seed;
        fc.max_outer = 25;
        if (seed == 83) fc.engine.kind = PhaseEngine::Pdd;
        if (seed == 84) fc.engine.kind = PhaseEngine::StdAdmm;
        const std::vector<double> rates(3, seed % 2 == 0 ? 1e5 : 2e5);
        const FeasibilityReport rep = check_feasibility(ch, rates, {10.0, 10.0, 10.0}, fc);

        REQUIRE(rep.alpha_trace.size() == static_cast<std::size_t>(rep.outer_iterations));
        for (std::size_t i = 1; i < rep.alpha_trace.size(); ++i)
            CHECK(rep.alpha_trace[i] <= rep.alpha_trace[i - 1] + 1e-8);
        CHECK(rep.alpha <= rep.alpha_trace.back() + 1e-8);
        CHECK(rep.alpha ==
              doctest::Approx(worst_scaled_error(ch, rep.phi, rep.q, rep.receivers, rates)));
        for (std::size_t k = 0; k < 3; ++k) CHECK(rep.q.q[k] <= 10.0 * (1.0 + 1e-9));
        if (rep.feasible) {
            CHECK(rep.alpha <= 1.0 + 1e-9);
            for (int k = 0; k < 3; ++k)
                CHECK(sinr_optimal(ch, rep.phi, rep.q, k) >= rates[k] * (1.0 - 1e-6));
        } else {
            CHECK(rep.outer_iterations <= 25);
        }
    }
}

TEST_CASE("fresh receivers are unimprovable for the worst scaled error") {
    for (std::uint64_t seed : {91, 92, 93}) {
        const ChannelSet ch = generate_channels(small_scenario(seed, 3, 3, 3));
        CounterRng rng(derive_seed(seed, 81, 0));
        const PhaseVector phi = random_phase_vector(3, rng);
        std::vector<double> draw(3);
        for (auto& v : draw) v = rng.uniform(1.0, 10.0);
        const PowerVector q = make_power_vector(draw);
        const std::vector<double> rates = {1.0, 2.0, 0.5};

        const std::vector<cvec> w = mmse_receivers(ch, phi, q);
        const double base = worst_scaled_error(ch, phi, q, w, rates);
        for (int probe = 0; probe < 100; ++probe) {
            const std::size_t k = probe % 3;
            std::vector<cvec> w2 = w;
            const double s = 0.01 * norm2(w[k]);
            for (auto& z : w2[k]) z += s * rng.next_cnormal();
            CHECK(worst_scaled_error(ch, phi, q, w2, rates) >= base - 1e-9);
        }
    }
}

TEST_CASE("feasibility rejects malformed inputs") {
    const ChannelSet ch = generate_channels(small_scenario(5, 2, 2, 3));
    const std::vector<double> rates = {1.0, 1.0};
    const std::vector<double> pmax = {10.0, 10.0};

    CHECK_THROWS_AS((void)check_feasibility(ch, {1.0}, pmax, {}), invalid_input);
    CHECK_THROWS_AS((void)check_feasibility(ch, {1.0, -0.5}, pmax, {}), invalid_input);
    CHECK_THROWS_AS((void)check_feasibility(ch, rates, {10.0}, {}), invalid_input);
    CHECK_THROWS_AS((void)check_feasibility(ch, rates, {10.0, 0.0}, {}), invalid_input);

    FeasibilityConfig bad;
    bad.max_outer = 0;
    CHECK_THROWS_AS((void)check_feasibility(ch, rates, pmax, bad), invalid_input);

    CounterRng rng(7);
    const PhaseVector phi = random_phase_vector(3, rng);
    const std::vector<cvec> w = {random_cvec(2, rng), random_cvec(2, rng)};
    CHECK_THROWS_AS((void)assemble_p6(ch, phi, {w[0]}, rates, pmax), invalid_input);
    CHECK_THROWS_AS((void)assemble_p6(ch, phi, {random_cvec(3, rng), random_cvec(3, rng)}, rates,
                                      pmax),
                    invalid_input);
    CHECK_THROWS_AS((void)assemble_p8(ch, make_power_vector({1.0}), w, rates), invalid_input);
    CHECK_THROWS_AS((void)assemble_p8(ch, PowerVector{{1.0, -2.0}}, w, rates), invalid_input);

    ChannelSet broken = ch;
    broken.h_r = ComplexMatrix(3, 1);
    CHECK_THROWS_AS((void)check_feasibility(broken, rates, pmax, {}), invalid_input);
}

TEST_CASE("phase engines certify first order optimality on channel built problems") {
    int tight = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ScenarioConfig cfg = small_scenario(seed, 4, 3, 16);
        const ChannelSet ch = generate_channels(cfg);
        CounterRng rng(derive_seed(seed, 500, 0));
        const PhaseVector phi0 = random_phase_vector(16, rng);
        std::vector<double> q(3);
        for (auto& v : q) v = 10.0 * (0.5 + 0.5 * rng.next_double());
        const PowerVector qv = make_power_vector(q);
        const std::vector<cvec> w = mmse_receivers(ch, phi0, qv);
        const std::vector<double> rates(3, 3.98);
        const PhaseProblem p8 = assemble_p8(ch, qv, w, rates);

        double a0 = -1e300;
        for (std::size_t k = 0; k < 3; ++k)
            a0 = std::max(a0, phase_constraint_value(p8, k, phi0.phi, {0.0}));

        const EngineResult pr = pdd_solve(p8, phi0, {a0 + 1.0});
        REQUIRE(pr.status == EngineStatus::Converged);
        CHECK(pr.res_split <= 1e-4);
        if (kkt_residual_p8(pr.phi_inner, pr.phi.phi, pr.aux, pr.duals, p8) <= 1e-3) ++tight;

        NeAdmmConfig nc;
        nc.tol = 1e-3;
        nc.max_iter = 100;
        const EngineResult nr = neadmm_solve(p8, phi0, {a0 + 1.0}, nc);
        CHECK(nr.status == EngineStatus::Converged);
        CHECK(nr.qcqp_solves < pr.qcqp_solves);

        double a_pdd = -1e300, a_ne = -1e300;
        for (std::size_t k = 0; k < 3; ++k) {
            a_pdd = std::max(a_pdd, phase_constraint_value(p8, k, pr.phi.phi, {0.0}));
            a_ne = std::max(a_ne, phase_constraint_value(p8, k, nr.phi.phi, {0.0}));
        }
        CHECK(std::abs(a_pdd - a_ne) <= 5e-2);
    }
    CHECK(tight >= 4);
}
