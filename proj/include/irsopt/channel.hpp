#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "irsopt/complex_linalg.hpp"
#include "irsopt/rng.hpp"

namespace irsopt {

double db_to_lin(double db);
double lin_to_db(double lin);
double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

// Geometry, propagation and load parameters for one drop. Distances in meters,
// powers in mW (linear), gains in dB(i). SINR targets are linear ratios.
struct ScenarioConfig {
    int m_antennas = 4;
    int k_users = 4;
    int n_elements = 32;

    std::array<double, 2> ap_position_m{0.0, 0.0};
    std::array<double, 2> irs_position_m{50.0, 0.0};
    // When empty, users are placed in a row parallel to the AP-IRS axis.
    std::vector<std::array<double, 2>> mu_positions_m;
    double mu_row_start_x_m = 47.0;
    double mu_row_y_m = 2.0;
    double mu_spacing_m = 2.0;

    double pathloss_exponent_mu = 3.0;   // user-AP and user-IRS links
    double pathloss_exponent_los = 2.0;  // AP-IRS line-of-sight link
    double pathloss_ref_db = -30.0;      // reference loss at 1 m
    double penetration_loss_db = 10.0;   // applied to both user-side links
    double noise_power_mw = 1e-13;
    double element_gain_dbi = 5.0;   // applied once per reflected link
    double antenna_gain_dbi = 0.0;   // applied at the AP

    std::vector<double> p_max_mw;      // per user; empty = 10 dBm each
    std::vector<double> sinr_targets;  // linear; empty = 6 dB each
    std::vector<double> weights;       // empty = all ones

    std::uint64_t rng_seed = 1;
};

// Fill in defaulted vectors (user positions, powers, targets, weights) and
// validate; returns the expanded config.
ScenarioConfig resolved(const ScenarioConfig& cfg);

struct LinkVariances {
    std::vector<double> direct;   // per-user variance of user-AP entries
    std::vector<double> reflect;  // per-user variance of user-IRS entries
    double los_gain;              // squared amplitude of AP-IRS entries
};

// Per-entry channel variances implied by the scenario geometry.
LinkVariances link_variances(const ScenarioConfig& cfg);

struct ChannelSet {
    ComplexMatrix g;    // M x N, AP-IRS line-of-sight
    ComplexMatrix h_r;  // N x K, user-IRS (column per user)
    ComplexMatrix h_d;  // M x K, user-AP (column per user)
    double noise_power_mw = 1e-13;
};

// Reflection coefficients, unit modulus per entry.
struct PhaseVector {
    cvec phi;
};

PhaseVector make_phase_vector(const cvec& phi);
PhaseVector random_phase_vector(std::size_t n, CounterRng& rng);

// Uplink transmit powers in mW.
struct PowerVector {
    std::vector<double> q;
};

PowerVector make_power_vector(const std::vector<double>& q);

// Draw one channel realization; deterministic in cfg.rng_seed.
ChannelSet generate_channels(const ScenarioConfig& cfg);

// Effective uplink channel per user: column k is G diag(phi) h_r[:,k] + h_d[:,k].
ComplexMatrix effective_channel(const ChannelSet& ch, const PhaseVector& phi);

// F_k = G diag(h_r[:,k]): maps phases to user k's reflected channel component.
ComplexMatrix reflect_response(const ChannelSet& ch, int k);

// SINR of user k under the optimal linear receiver.
double sinr_optimal(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q, int k);
double sinr_optimal_cols(const ComplexMatrix& h, double noise_mw, const std::vector<double>& q,
                         int k);

// Minimum-MSE receive filters for all users.
std::vector<cvec> mmse_receivers(const ChannelSet& ch, const PhaseVector& phi,
                                 const PowerVector& q);
std::vector<cvec> mmse_receivers_cols(const ComplexMatrix& h, double noise_mw,
                                      const std::vector<double>& q);

// Mean-square detection error of user k under receiver w.
double mse(const ChannelSet& ch, const PhaseVector& phi, const PowerVector& q, const cvec& w,
           int k);
double mse_cols(const ComplexMatrix& h, double noise_mw, const std::vector<double>& q,
                const cvec& w, int k);

// Sufficient condition for every target to be reachable with unlimited power:
// the direct matrix keeps full column rank for every phase configuration.
bool lemma1_condition(const ChannelSet& ch);

}  // namespace irsopt
