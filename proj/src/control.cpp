#include "modalkit/control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "modalkit/spectral.hpp"

namespace modalkit::control {

void LoopConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
    if (!(target_error > 0.0)) throw UsageError("target_error must be > 0");
    if (max_iterations < 1) throw UsageError("max_iterations must be >= 1");
    if (!(ramp_fraction >= 0.0 && ramp_fraction < 0.5))
        throw UsageError("ramp_fraction must lie in [0, 0.5)");
    if (n_samples == 0 || !(sample_rate > 0.0))
        throw UsageError("acquisition parameters must be positive");
}

Plant Plant::constant_gain(double amplitude_gain, double noise_level, std::uint64_t seed) {
    if (!(amplitude_gain > 0.0)) throw UsageError("plant gain must be > 0");
    Plant p;
    p.gain_ = amplitude_gain;
    p.noise_level_ = noise_level;
    p.seed_ = seed;
    return p;
}

Plant Plant::modal(ModalParameterSet modal, double noise_level, std::uint64_t seed) {
    if (modal.empty()) throw UsageError("modal plant needs at least one mode");
    Plant p;
    p.modal_ = std::move(modal);
    p.is_modal_ = true;
    p.noise_level_ = noise_level;
    p.seed_ = seed;
    return p;
}

std::vector<double> Plant::psd_gain(const FrequencyGrid& grid) const {
    std::vector<double> g(grid.size());
    if (!is_modal_) {
        std::fill(g.begin(), g.end(), gain_ * gain_);
        return g;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = kTwoPi * grid[i];
        Complex h(0.0, 0.0);
        for (const auto& m : modal_.modes()) {
            const double wr = kTwoPi * m.natural_frequency_hz;
            h += Complex(-w * w * m.residue, 0.0) /
                 Complex(wr * wr - w * w, 2.0 * m.damping_ratio * wr * w);
        }
        g[i] = std::norm(h);
    }
    return g;
}

TargetSpectrum make_target(TargetKind kind, const FrequencyGrid& grid,
                           const std::vector<double>& amplitude_profile, std::uint64_t seed) {
    if (grid.empty()) throw DataError("target grid must be non-empty");
    if (amplitude_profile.size() != grid.size())
        throw DataError("amplitude profile length does not match grid");
    for (double v : amplitude_profile)
        if (!(v >= 0.0)) throw DataError("target magnitude must be >= 0");

    TargetSpectrum t;
    t.grid = grid;
    t.kind = kind;
    t.magnitude = amplitude_profile;
    t.phase.resize(grid.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
    for (auto& p : t.phase) p = uniform(rng);
    if (kind == TargetKind::odd_phase) {
        for (std::size_t i = 0; i < grid.size(); i += 2) {  // odd 1-based lines
            t.magnitude[i] = 0.0;
            t.phase[i] = 0.0;
        }
    }
    return t;
}

std::vector<double> make_band_profile(const FrequencyGrid& grid, double lo_hz, double hi_hz,
                                      double level, double ramp_fraction) {
    if (!(lo_hz < hi_hz)) throw UsageError("profile band must satisfy lo < hi");
    std::vector<double> profile(grid.size(), 0.0);
    const double ramp = ramp_fraction * (hi_hz - lo_hz);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double f = grid[i];
        if (f < lo_hz || f > hi_hz) continue;
        double v = level;
        if (ramp > 0.0) {
            if (f < lo_hz + ramp)
                v *= (f - lo_hz) / ramp;
            else if (f > hi_hz - ramp)
                v *= (hi_hz - f) / ramp;
        }
        profile[i] = v;
    }
    return profile;
}

TimeSeriesRecord drive_signal(const ControlState& state, const LoopConfig& config,
                              std::size_t n_samples, double sample_rate) {
    if (n_samples == 0 || !(sample_rate > 0.0))
        throw DataError("invalid acquisition parameters");
    const double df = sample_rate / static_cast<double>(n_samples);
    std::vector<double> amp(n_samples / 2 + 1, 0.0);
    std::vector<double> phase(n_samples / 2 + 1, 0.0);
    for (std::size_t i = 0; i < state.grid.size(); ++i) {
        const double kf = state.grid[i] / df;
        const auto k = static_cast<std::size_t>(std::llround(kf));
        if (k >= amp.size() || std::abs(kf - static_cast<double>(k)) > 1e-9 * std::max(1.0, kf))
            throw DataError("grid line " + std::to_string(state.grid[i]) +
                            " Hz does not sit on the acquisition line spacing");
        if (k == 0) continue;
        // One-sided PSD S over one bin width <-> sine amplitude sqrt(2 df S).
        amp[k] = std::sqrt(2.0 * df * state.drive_psd[i]);
        phase[k] = state.phase[i];
    }
    TimeSeriesRecord record(spectral::synthesize_multisine(amp, phase, n_samples), sample_rate,
                            "drive", SignalUnit::volt);

    const auto ramp_len =
        static_cast<std::size_t>(std::floor(config.ramp_fraction * static_cast<double>(n_samples)));
    for (std::size_t i = 0; i < ramp_len; ++i) {
        const double w = static_cast<double>(i) / static_cast<double>(ramp_len);
        record.samples[i] *= w;
        record.samples[n_samples - 1 - i] *= w;
    }
    return record;
}

ControlState update_transfer(const ControlState& state,
                             const std::vector<double>& measured_force_psd,
                             const TargetSpectrum& target, const LoopConfig& config) {
    if (measured_force_psd.size() != target.magnitude.size() ||
        state.drive_psd.size() != target.magnitude.size())
        throw DataError("PSD vectors must share the target grid length");

    ControlState next = state;
    next.iteration = state.iteration + 1;

    double floor_level = 0.0;
    for (double v : target.magnitude) floor_level = std::max(floor_level, v);
    floor_level *= 1e-12;

    const auto n = target.magnitude.size();
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sr = target.magnitude[i];
        const double sf = measured_force_psd[i];
        const double d = sf - sr;
        mse += d * d;
        if (sr <= 0.0) continue;  // inactive line, transfer left unchanged
        double sf_used = sf;
        if (!(sf_used > floor_level)) {
            sf_used = std::max(floor_level, 1e-300);
            ++next.floored_lines;
        }
        next.transfer_estimate[i] *= std::pow(sf_used / sr, config.alpha);
        next.drive_psd[i] = sr / next.transfer_estimate[i];
    }
    next.error = mse / static_cast<double>(n);
    next.converged = next.error < config.target_error;
    return next;
}

LoopResult run_loop(const Plant& plant, const TargetSpectrum& target, const LoopConfig& config) {
    config.validate();
    const double df = config.sample_rate / static_cast<double>(config.n_samples);
    if (target.grid.back() > config.sample_rate / 2.0)
        throw DataError("target extends above the acquisition Nyquist");
    if (target.grid.size() > 1 &&
        std::abs(std::remainder(target.grid.spacing(), df)) > 1e-6 * df)
        throw DataError("target line spacing is not a multiple of the acquisition spacing");

    ControlState state;
    state.grid = target.grid;
    state.phase = target.phase;
    state.transfer_estimate.assign(target.grid.size(), 1.0);
    state.drive_psd = target.magnitude;  // initial drive set to the reference

    const auto gain = plant.psd_gain(target.grid);
    std::mt19937_64 rng(plant.seed());
    std::normal_distribution<double> gauss(0.0, 1.0);

    LoopResult result;
    TimeSeriesRecord last_drive;
    for (int it = 1; it <= config.max_iterations; ++it) {
        last_drive = drive_signal(state, config, config.n_samples, config.sample_rate);

        std::vector<double> measured(target.grid.size());
        for (std::size_t i = 0; i < measured.size(); ++i) {
            double m = gain[i] * state.drive_psd[i];
            if (plant.noise_level() > 0.0)
                m = std::max(0.0, m * (1.0 + plant.noise_level() * gauss(rng)));
            measured[i] = m;
        }
        state = update_transfer(state, measured, target, config);
        result.history.push_back(state);
        if (state.converged) break;
    }

    result.best_iteration = 0;
    for (std::size_t i = 1; i < result.history.size(); ++i)
        if (result.history[i].error < result.history[result.best_iteration].error)
            result.best_iteration = i;
    result.converged = result.history.back().converged;
    result.final_drive = result.converged
                             ? last_drive
                             : drive_signal(result.history[result.best_iteration], config,
                                            config.n_samples, config.sample_rate);
    return result;
}

void write_history_csv(const LoopResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "iteration,epsilon,converged\n";
    for (const auto& s : result.history)
        out << s.iteration << ',' << s.error << ',' << (s.converged ? 1 : 0) << '\n';
}

void write_psd_csv(const ControlState& state, const TargetSpectrum& target,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "freq_hz,target_psd,drive_psd,transfer_estimate\n";
    for (std::size_t i = 0; i < state.grid.size(); ++i)
        out << state.grid[i] << ',' << target.magnitude[i] << ',' << state.drive_psd[i] << ','
            << state.transfer_estimate[i] << '\n';
}

}  // namespace modalkit::control
