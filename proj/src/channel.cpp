#include "irsopt/channel.hpp"

#include <cmath>
#include <string>

#include "irsopt/errors.hpp"

namespace irsopt {

namespace {

constexpr double kPi = 3.14159265358979323846;

double distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

double pathloss_lin(double ref_db, double dist_m, double exponent) {
    if (!(dist_m > 0.0)) throw invalid_input("pathloss: distance must be positive");
    return db_to_lin(ref_db) * std::pow(dist_m, -exponent);
}

}  // namespace

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

ScenarioConfig resolved(const ScenarioConfig& cfg) {
    ScenarioConfig out = cfg;
    if (out.m_antennas < 1 || out.k_users < 1 || out.n_elements < 1)
        throw invalid_input("scenario: M, K, N must be at least 1");
    if (!(out.noise_power_mw > 0.0)) throw invalid_input("scenario: noise power must be positive");
    if (out.pathloss_exponent_mu < 0.0 || out.pathloss_exponent_los < 0.0)
        throw invalid_input("scenario: pathloss exponents must be nonnegative");

    const std::size_t k = static_cast<std::size_t>(out.k_users);
    if (out.mu_positions_m.empty()) {
        for (std::size_t i = 0; i < k; ++i)
            out.mu_positions_m.push_back(
                {out.mu_row_start_x_m + out.mu_spacing_m * double(i), out.mu_row_y_m});
    }
    if (out.mu_positions_m.size() != k)
        throw invalid_input("scenario: user position count does not match K");

    if (out.p_max_mw.empty()) out.p_max_mw.assign(k, dbm_to_mw(10.0));
    if (out.p_max_mw.size() == 1 && k > 1) out.p_max_mw.assign(k, out.p_max_mw[0]);
    if (out.sinr_targets.empty()) out.sinr_targets.assign(k, db_to_lin(6.0));
    if (out.sinr_targets.size() == 1 && k > 1) out.sinr_targets.assign(k, out.sinr_targets[0]);
    if (out.weights.empty()) out.weights.assign(k, 1.0);
    if (out.weights.size() == 1 && k > 1) out.weights.assign(k, out.weights[0]);

    if (out.p_max_mw.size() != k || out.sinr_targets.size() != k || out.weights.size() != k)
        throw invalid_input("scenario: per-user vector length does not match K");
    for (std::size_t i = 0; i < k; ++i) {
        if (!(out.p_max_mw[i] > 0.0)) throw invalid_input("scenario: power budget must be positive");
        if (!(out.sinr_targets[i] > 0.0)) throw invalid_input("scenario: SINR target must be positive");
        if (!(out.weights[i] > 0.0)) throw invalid_input("scenario: weights must be positive");
    }
    return out;
}

LinkVariances link_variances(const ScenarioConfig& cfg_in) {
    const ScenarioConfig cfg = resolved(cfg_in);
    LinkVariances lv;
    const double pen = db_to_lin(-cfg.penetration_loss_db);
    const double g_ant = db_to_lin(cfg.antenna_gain_dbi);
    const double g_elem = db_to_lin(cfg.element_gain_dbi);
    for (int k = 0; k < cfg.k_users; ++k) {
        const double d_ap = distance(cfg.mu_positions_m[k], cfg.ap_position_m);
        const double d_irs = distance(cfg.mu_positions_m[k], cfg.irs_position_m);
        lv.direct.push_back(pathloss_lin(cfg.pathloss_ref_db, d_ap, cfg.pathloss_exponent_mu) *
                            pen * g_ant);
        lv.reflect.push_back(pathloss_lin(cfg.pathloss_ref_db, d_irs, cfg.pathloss_exponent_mu) *
                             pen * g_elem);
    }
    const double d_los = distance(cfg.ap_position_m, cfg.irs_position_m);
    lv.los_gain = pathloss_lin(cfg.pathloss_ref_db, d_los, cfg.pathloss_exponent_los) * g_ant;
    return lv;
}

PhaseVector make_phase_vector(const cvec& phi) {
    require_finite(phi, "phase vector");
    for (const auto& z : phi)
        if (std::abs(std::abs(z) - 1.0) > 1e-9)
            throw invalid_input("phase vector: entries must have unit modulus");
    return PhaseVector{phi};
}

PhaseVector random_phase_vector(std::size_t n, CounterRng& rng) {
    cvec phi(n);
    for (auto& z : phi) {
        const double th = rng.uniform(0.0, 2.0 * kPi);
        z = cplx{std::cos(th), std::sin(th)};
    }
    return PhaseVector{phi};
}

PowerVector make_power_vector(const std::vector<double>& q) {
    if (!all_finite(q)) throw invalid_input("power vector: non-finite entries");
    for (double v : q)
        if (v < 0.0) throw invalid_input("power vector: entries must be nonnegative");
    return PowerVector{q};
}

ChannelSet generate_channels(const ScenarioConfig& cfg_in) {
    const ScenarioConfig cfg = resolved(cfg_in);
    const LinkVariances lv = link_variances(cfg);
    const std::size_t m = cfg.m_antennas, k = cfg.k_users, n = cfg.n_elements;

    ChannelSet ch;
    ch.noise_power_mw = cfg.noise_power_mw;

    // Line-of-sight AP-IRS link: rank-one product of half-wavelength array
    // responses at the geometric angles.
    const double th_ap = std::atan2(cfg.irs_position_m[1] - cfg.ap_position_m[1],
                                    cfg.irs_position_m[0] - cfg.ap_position_m[0]);
    const double th_irs = std::atan2(cfg.ap_position_m[1] - cfg.irs_position_m[1],
                                     cfg.ap_position_m[0] - cfg.irs_position_m[0]);
    const double amp = std::sqrt(lv.los_gain);
    ch.g = ComplexMatrix(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double ph = kPi * (double(i) * std::sin(th_ap) + double(j) * std::sin(th_irs));
            ch.g(i, j) = amp * cplx{std::cos(ph), std::sin(ph)};
        }

    ch.h_d = ComplexMatrix(m, k);
    ch.h_r = ComplexMatrix(n, k);
    for (std::size_t u = 0; u < k; ++u) {
        CounterRng rng_d(derive_seed(cfg.rng_seed, 1, u));
        for (std::size_t i = 0; i < m; ++i) ch.h_d(i, u) = rng_d.next_cnormal(lv.direct[u]);
        CounterRng rng_r(derive_seed(cfg.rng_seed, 2, u));
        for (std::size_t i = 0; i < n; ++i) ch.h_r(i, u) = rng_r.next_cnormal(lv.reflect[u]);
    }
    return ch;
}

ComplexMatrix effective_channel(const ChannelSet& ch, const PhaseVector& phi) {
    const std::size_t m = ch.g.rows(), n = ch.g.cols(), k = ch.h_d.cols();
    if (phi.phi.size() != n) throw invalid_input("effective_channel: phase length mismatch");
    if (ch.h_r.rows() != n || ch.h_d.rows() != m)
        throw invalid_input("effective_channel: channel dimensions inconsistent");
    ComplexMatrix h(m, k);
    for (std::size_t u = 0; u < k; ++u)
        for (std::size_t i = 0; i < m; ++i) {
            cplx s = ch.h_d(i, u);
            for (std::size_t j = 0; j < n; ++j) s += ch.g(i, j) * phi.phi[j] * ch.h_r(j, u);
            h(i, u) = s;
        }
    return h;
}

ComplexMatrix reflect_response(const ChannelSet& ch, int k) {
    const std::size_t m = ch.g.rows(), n = ch.g.cols();
    if (k < 0 || std::size_t(k) >= ch.h_r.cols())
        throw invalid_input("reflect_response: user index out of range");
    ComplexMatrix f(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) f(i, j) = ch.g(i, j) * ch.h_r(j, k);
    return f;
}

double sinr_optimal_cols(const ComplexMatrix& h, double noise_mw, const std::vector<double>& q,
                         int k) {
    const std::size_t m = h.rows(), users = h.cols();
    if (q.size() != users) throw invalid_input("sinr: power length mismatch");
    if (k < 0 || std::size_t(k) >= users) throw invalid_input("sinr: user index out of range");
    ComplexMatrix w(m, m);
    for (std::size_t i = 0; i < m; ++i) w(i, i) = noise_mw;
    for (std::size_t u = 0; u < users; ++u) {
        if (u == std::size_t(k)) continue;
        add_scaled_outer(w, q[u], h.col(u));
    }
    const cvec hk = h.col(k);
    const cvec x = hermitian_solve(w, hk);
    return q[k] * dot(hk, x).real();
}

double sinr_optimal(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q, int k) {
    return sinr_optimal_cols(effective_channel(ch, phi), ch.noise_power_mw, q.q, k);
}

std::vector<cvec> mmse_receivers_cols(const ComplexMatrix& h, double noise_mw,
                                      const std::vector<double>& q) {
    const std::size_t m = h.rows(), users = h.cols();
    if (q.size() != users) throw invalid_input("mmse_receivers: power length mismatch");
    ComplexMatrix w(m, m);
    for (std::size_t i = 0; i < m; ++i) w(i, i) = noise_mw;
    for (std::size_t u = 0; u < users; ++u) add_scaled_outer(w, q[u], h.col(u));
    std::vector<cvec> out;
    out.reserve(users);
    for (std::size_t u = 0; u < users; ++u)
        out.push_back(hermitian_solve(w, scale(h.col(u), std::sqrt(q[u]))));
    return out;
}

std::vector<cvec> mmse_receivers(const ChannelSet& ch, const PhaseVector& phi,
                                 const PowerVector& q) {
    return mmse_receivers_cols(effective_channel(ch, phi), ch.noise_power_mw, q.q);
}

double mse_cols(const ComplexMatrix& h, double noise_mw, const std::vector<double>& q,
                const cvec& w, int k) {
    const std::size_t users = h.cols();
    if (q.size() != users) throw invalid_input("mse: power length mismatch");
    if (w.size() != h.rows()) throw invalid_input("mse: receiver length mismatch");
    if (k < 0 || std::size_t(k) >= users) throw invalid_input("mse: user index out of range");
    double e = 1.0;
    for (std::size_t u = 0; u < users; ++u) e += q[u] * std::norm(dot(w, h.col(u)));
    e -= 2.0 * std::sqrt(q[k]) * dot(w, h.col(k)).real();
    double wn = 0.0;
    for (const auto& z : w) wn += std::norm(z);
    return e + noise_mw * wn;
}

double mse(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q, const cvec& w,
           int k) {
    return mse_cols(effective_channel(ch, phi), ch.noise_power_mw, q.q, w, k);
}

bool lemma1_condition(const ChannelSet& ch) {
    const std::size_t m = ch.h_d.rows(), k = ch.h_d.cols();
    if (m < k)
        throw unsupported_configuration(
            "lemma1_condition: needs at least as many AP antennas as users");
    const SvdExtremes sd = svd_extremes(ch.h_d);
    if (sd.nonzero_count != int(k)) return false;
    const SvdExtremes sg = svd_extremes(ch.g);
    const SvdExtremes sr = svd_extremes(ch.h_r);
    return sg.sigma_max * sr.sigma_max < sd.sigma_min_nonzero;
}

}  // namespace irsopt
