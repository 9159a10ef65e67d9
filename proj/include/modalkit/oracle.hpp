#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "modalkit/types.hpp"

namespace modalkit::oracle {

/// Synthetic linear structure with known modal parameters. Acts as the
/// ground-truth generator for every identifier in the library.
struct SyntheticSystem {
    ModalParameterSet modal;
    int output_count = 1;
    double noise_level = 0.0;  // relative RMS of additive measurement noise
    std::uint64_t seed = 0;

    /// Per-output participation: residues(l, r) is the residue of mode r at
    /// output l. Defaults to the modal residues replicated on every output.
    Eigen::MatrixXd residues;

    static SyntheticSystem from_modal(ModalParameterSet modal, int output_count = 1,
                                      double noise_level = 0.0, std::uint64_t seed = 0);

    void validate() const;
};

enum class ExcitationKind {
    burst_random,
    sine_sweep_linear,
    sine_sweep_log,
    multisine_random_phase,
    multisine_odd_phase,
};

enum class SweepDirection { forward, reverse };

struct ExcitationSpec {
    ExcitationKind kind = ExcitationKind::burst_random;
    SweepDirection direction = SweepDirection::forward;
    double amplitude = 1.0;
    double active_fraction = 0.9;  // central occupied fraction of the record
    std::uint64_t seed = 0;
    double band_lo_hz = 1.0;  // spectral content band (sweeps, multisines)
    double band_hi_hz = 100.0;
    SignalUnit units = SignalUnit::volt;
};

/// Analytic accelerance FRF of the system at one input/output pair:
/// H(w) = sum_r -w^2 residue_r / (w_r^2 - w^2 + 2 j zeta_r w_r w).
/// A grid line exactly on an undamped resonance raises DataError.
/// noise_level > 0 adds seeded complex Gaussian perturbation of that
/// relative RMS.
Frf frf_from_modal(const SyntheticSystem& system, const FrequencyGrid& grid,
                   int input_index = 0, int output_index = 0);

/// Zero-order-hold simulation of the driven modal model. Returns one
/// acceleration record per output channel, with seeded measurement noise
/// at the system noise level. Requires the Nyquist frequency to clear
/// 2.56x the highest mode.
std::vector<TimeSeriesRecord> simulate_response(const SyntheticSystem& system,
                                                const TimeSeriesRecord& drive);

/// Deterministic multisine s(t) = sum_i A_i sin(2 pi f_i t + phi_i)
/// over the full record; line frequencies must sit on FFT bins.
TimeSeriesRecord multisine(const std::vector<double>& amplitudes,
                           const std::vector<double>& phases,
                           const std::vector<double>& lines_hz, std::size_t n_samples,
                           double sample_rate, SignalUnit units = SignalUnit::volt);

/// Excitation signal of the requested kind. Bursts and sweeps occupy the
/// central active_fraction of the record with exact zeros outside;
/// multisines run over the full record. Deterministic given the seed.
TimeSeriesRecord generate_excitation(const ExcitationSpec& spec, std::size_t n_samples,
                                     double sample_rate);

}  // namespace modalkit::oracle
