#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modalkit/types.hpp"

namespace modalkit::control {

enum class TargetKind { random_phase, odd_phase };

/// Target force PSD over a discrete frequency vector. Odd-phase targets
/// carry exact zeros for magnitude and phase on every odd 1-based line.
struct TargetSpectrum {
    FrequencyGrid grid;
    std::vector<double> magnitude;  // PSD, N^2/Hz
    std::vector<double> phase;      // radians
    TargetKind kind = TargetKind::random_phase;
};

/// State of the iterative drive equalizer. transfer_estimate maps drive PSD
/// to force PSD per line; drive_psd is the commanded spectrum.
struct ControlState {
    FrequencyGrid grid;
    std::vector<double> phase;
    std::vector<double> transfer_estimate;
    std::vector<double> drive_psd;
    int iteration = 0;
    double error = 0.0;
    bool converged = false;
    int floored_lines = 0;  // division guards applied so far
};

struct LoopConfig {
    double alpha = 0.8;          // relaxation of the transfer update
    double target_error = 0.01;  // mean-squared PSD error threshold
    int max_iterations = 50;
    double ramp_fraction = 0.05;  // linear amplitude ramp per record end
    std::size_t n_samples = 4096;
    double sample_rate = 1024.0;

    void validate() const;
    /// alpha == 0 freezes the transfer estimate; the loop cannot converge
    /// on a non-unity plant.
    bool degenerate_alpha() const { return alpha == 0.0; }
};

/// Simulated force path: a per-line PSD power gain (constant or modal)
/// with optional multiplicative measurement noise.
class Plant {
 public:
    /// Force amplitude = gain x drive amplitude, PSD gain = gain^2.
    static Plant constant_gain(double amplitude_gain, double noise_level = 0.0,
                               std::uint64_t seed = 0);

    /// Resonant path through a modal transfer function.
    static Plant modal(ModalParameterSet modal, double noise_level = 0.0,
                       std::uint64_t seed = 0);

    std::vector<double> psd_gain(const FrequencyGrid& grid) const;
    double noise_level() const { return noise_level_; }
    std::uint64_t seed() const { return seed_; }

 private:
    Plant() = default;
    double gain_ = 1.0;
    ModalParameterSet modal_;
    bool is_modal_ = false;
    double noise_level_ = 0.0;
    std::uint64_t seed_ = 0;
};

/// Build a target spectrum: magnitude from the supplied per-line profile,
/// phases i.i.d. uniform [0, 2 pi) from the seed. The odd-phase kind zeroes
/// every other line starting from the first.
TargetSpectrum make_target(TargetKind kind, const FrequencyGrid& grid,
                           const std::vector<double>& amplitude_profile, std::uint64_t seed);

/// Amplitude profile that ramps up across the first part of [lo, hi],
/// holds level, and ramps down; zero outside the band.
std::vector<double> make_band_profile(const FrequencyGrid& grid, double lo_hz, double hi_hz,
                                      double level, double ramp_fraction = 0.1);

/// Synthesize the drive record from the current drive PSD and stored
/// phases, then apply the linear end ramps. Grid lines must sit on the
/// FFT bins implied by n_samples and sample_rate.
TimeSeriesRecord drive_signal(const ControlState& state, const LoopConfig& config,
                              std::size_t n_samples, double sample_rate);

/// One transfer/drive update from a measured force PSD:
/// T <- T * (S_f / S_r)^alpha on active lines, drive = S_r / T,
/// error = mean over all lines of (S_f - S_r)^2.
ControlState update_transfer(const ControlState& state,
                             const std::vector<double>& measured_force_psd,
                             const TargetSpectrum& target, const LoopConfig& config);

struct LoopResult {
    std::vector<ControlState> history;
    TimeSeriesRecord final_drive;
    bool converged = false;
    std::size_t best_iteration = 0;  // index into history with smallest error
};

/// Run the closed loop until convergence or max_iterations. The initial
/// drive PSD equals the target (unit transfer estimate). On timeout the
/// result carries the best state seen.
LoopResult run_loop(const Plant& plant, const TargetSpectrum& target, const LoopConfig& config);

/// CSV exports: per-iteration summary and per-iteration PSDs.
void write_history_csv(const LoopResult& result, const std::string& path);
void write_psd_csv(const ControlState& state, const TargetSpectrum& target,
                   const std::string& path);

}  // namespace modalkit::control
