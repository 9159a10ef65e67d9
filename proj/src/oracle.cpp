#include "modalkit/oracle.hpp"

#include <cmath>
#include <random>

#include "modalkit/spectral.hpp"

namespace modalkit::oracle {

SyntheticSystem SyntheticSystem::from_modal(ModalParameterSet modal, int output_count,
                                            double noise_level, std::uint64_t seed) {
    SyntheticSystem sys;
    sys.output_count = output_count;
    sys.noise_level = noise_level;
    sys.seed = seed;
    sys.residues.resize(output_count, static_cast<Eigen::Index>(modal.size()));
    for (Eigen::Index l = 0; l < sys.residues.rows(); ++l)
        for (std::size_t r = 0; r < modal.size(); ++r)
            sys.residues(l, static_cast<Eigen::Index>(r)) = modal[r].residue;
    sys.modal = std::move(modal);
    sys.validate();
    return sys;
}

void SyntheticSystem::validate() const {
    if (output_count < 1) throw DataError("system must have at least one output");
    if (noise_level < 0.0) throw DataError("noise level must be >= 0");
    if (modal.empty()) throw DataError("system modal set must be non-empty");
    if (residues.rows() != output_count ||
        residues.cols() != static_cast<Eigen::Index>(modal.size()))
        throw DataError("residue matrix shape must be output_count x mode count");
}

Frf frf_from_modal(const SyntheticSystem& system, const FrequencyGrid& grid, int input_index,
                   int output_index) {
    system.validate();
    if (grid.empty()) throw DataError("frequency grid must be non-empty");
    if (input_index != 0) throw DataError("single-input system: input_index must be 0");
    if (output_index < 0 || output_index >= system.output_count)
        throw DataError("output index out of range");

    // An exactly undamped mode evaluated on its own frequency has no
    // finite response.
    for (const auto& m : system.modal.modes()) {
        if (m.damping_ratio == 0.0) {
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (grid[i] == m.natural_frequency_hz)
                    throw DataError("grid hits undamped resonance at " +
                                    std::to_string(m.natural_frequency_hz) + " Hz");
        }
    }

    std::vector<Complex> h(grid.size(), Complex(0.0, 0.0));
    for (std::size_t r = 0; r < system.modal.size(); ++r) {
        const auto& m = system.modal[r];
        const double wr = kTwoPi * m.natural_frequency_hz;
        const double res = system.residues(output_index, static_cast<Eigen::Index>(r));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double w = kTwoPi * grid[i];
            const Complex den(wr * wr - w * w, 2.0 * m.damping_ratio * wr * w);
            h[i] += Complex(-w * w * res, 0.0) / den;
        }
    }

    if (system.noise_level > 0.0) {
        double rms = 0.0;
        for (const auto& v : h) rms += std::norm(v);
        rms = std::sqrt(rms / static_cast<double>(h.size()));
        std::mt19937_64 rng(system.seed);
        std::normal_distribution<double> gauss(0.0, system.noise_level * rms / std::sqrt(2.0));
        for (auto& v : h) v += Complex(gauss(rng), gauss(rng));
    }

    return Frf(grid, std::move(h), "FRC", "out" + std::to_string(output_index));
}

namespace {

struct ModeBlock {
    // Discrete 2x2 state update for one mode under zero-order hold.
    double a00, a01, a10, a11;
    double b0, b1;
    double c0, c1;  // acceleration read-out before residue scaling; d = 1
};

ModeBlock discretize_mode(double wr, double zeta, double dt) {
    const double sigma = zeta * wr;
    const double wd = wr * std::sqrt(1.0 - zeta * zeta);
    const double e = std::exp(-sigma * dt);
    const double c = std::cos(wd * dt);
    const double s = std::sin(wd * dt);

    ModeBlock m{};
    m.a00 = e * (c + sigma / wd * s);
    m.a01 = e * (s / wd);
    m.a10 = -e * (wr * wr / wd * s);
    m.a11 = e * (c - sigma / wd * s);
    // Bd = Ac^-1 (Ad - I) Bc with Ac = [[0,1],[-wr^2,-2 sigma]].
    m.b0 = (-2.0 * sigma * m.a01 - m.a11 + 1.0) / (wr * wr);
    m.b1 = m.a01;
    m.c0 = -wr * wr;
    m.c1 = -2.0 * sigma;
    return m;
}

}  // namespace

std::vector<TimeSeriesRecord> simulate_response(const SyntheticSystem& system,
                                                const TimeSeriesRecord& drive) {
    system.validate();
    const double f_max = system.modal.highest_frequency_hz();
    if (drive.sample_rate / 2.0 < 2.56 * f_max)
        throw BandwidthError("sample rate " + std::to_string(drive.sample_rate) +
                             " Hz too low: Nyquist must clear 2.56x the highest mode (" +
                             std::to_string(f_max) + " Hz)");

    const double dt = 1.0 / drive.sample_rate;
    const std::size_t n = drive.samples.size();
    const std::size_t n_modes = system.modal.size();

    std::vector<ModeBlock> blocks;
    blocks.reserve(n_modes);
    for (const auto& m : system.modal.modes())
        blocks.push_back(discretize_mode(kTwoPi * m.natural_frequency_hz, m.damping_ratio, dt));

    // Per-mode acceleration paths, combined per output through the residues.
    Eigen::MatrixXd mode_acc(static_cast<Eigen::Index>(n_modes), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n_modes; ++r) {
        const auto& mb = blocks[r];
        double x0 = 0.0, x1 = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double u = drive.samples[t];
            mode_acc(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
                mb.c0 * x0 + mb.c1 * x1 + u;
            const double nx0 = mb.a00 * x0 + mb.a01 * x1 + mb.b0 * u;
            const double nx1 = mb.a10 * x0 + mb.a11 * x1 + mb.b1 * u;
            x0 = nx0;
            x1 = nx1;
        }
    }

    std::vector<TimeSeriesRecord> out;
    out.reserve(static_cast<std::size_t>(system.output_count));
    for (int l = 0; l < system.output_count; ++l) {
        std::vector<double> y(n, 0.0);
        for (std::size_t r = 0; r < n_modes; ++r) {
            const double res = system.residues(l, static_cast<Eigen::Index>(r));
            if (res == 0.0) continue;
            for (std::size_t t = 0; t < n; ++t)
                y[t] += res * mode_acc(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t));
        }
        if (system.noise_level > 0.0) {
            double rms = 0.0;
            for (double v : y) rms += v * v;
            rms = std::sqrt(rms / static_cast<double>(n));
            std::mt19937_64 rng(system.seed + 0x9e3779b97f4a7c15ULL * (l + 1));
            std::normal_distribution<double> gauss(0.0, system.noise_level * rms);
            for (auto& v : y) v += gauss(rng);
        }
        out.emplace_back(std::move(y), drive.sample_rate, "out" + std::to_string(l),
                         SignalUnit::g);
    }
    return out;
}

TimeSeriesRecord multisine(const std::vector<double>& amplitudes,
                           const std::vector<double>& phases,
                           const std::vector<double>& lines_hz, std::size_t n_samples,
                           double sample_rate, SignalUnit units) {
    if (n_samples == 0) throw DataError("n_samples must be > 0");
    if (amplitudes.size() != phases.size() || amplitudes.size() != lines_hz.size())
        throw DataError("multisine vectors must share length");
    const double df = sample_rate / static_cast<double>(n_samples);
    std::vector<double> amp_bins(n_samples / 2 + 1, 0.0);
    std::vector<double> phase_bins(n_samples / 2 + 1, 0.0);
    for (std::size_t i = 0; i < lines_hz.size(); ++i) {
        const double kf = lines_hz[i] / df;
        const auto k = static_cast<std::size_t>(std::llround(kf));
        if (k == 0 || k >= amp_bins.size() || std::abs(kf - static_cast<double>(k)) > 1e-6)
            throw DataError("multisine line " + std::to_string(lines_hz[i]) +
                            " Hz is not an FFT bin of the record");
        amp_bins[k] = amplitudes[i];
        phase_bins[k] = phases[i];
    }
    auto s = spectral::synthesize_multisine(amp_bins, phase_bins, n_samples);
    return TimeSeriesRecord(std::move(s), sample_rate, "drive", units);
}

namespace {

// Edge ramp inside the burst window, as a fraction of the burst length.
constexpr double kBurstEdgeFraction = 0.05;

}  // namespace

TimeSeriesRecord generate_excitation(const ExcitationSpec& spec, std::size_t n_samples,
                                     double sample_rate) {
    if (n_samples == 0) throw DataError("n_samples must be > 0");
    if (!(spec.active_fraction > 0.0 && spec.active_fraction <= 1.0))
        throw DataError("active_fraction must lie in (0, 1]");

    const auto n_active =
        static_cast<std::size_t>(std::llround(spec.active_fraction * static_cast<double>(n_samples)));
    const std::size_t start = (n_samples - n_active) / 2;
    std::vector<double> s(n_samples, 0.0);
    std::mt19937_64 rng(spec.seed);

    switch (spec.kind) {
        case ExcitationKind::burst_random: {
            std::normal_distribution<double> gauss(0.0, 1.0);
            const auto edge = static_cast<std::size_t>(
                std::llround(kBurstEdgeFraction * static_cast<double>(n_active)));
            for (std::size_t i = 0; i < n_active; ++i) {
                double v = spec.amplitude * gauss(rng);
                if (edge > 0) {
                    if (i < edge)
                        v *= static_cast<double>(i) / static_cast<double>(edge);
                    else if (i >= n_active - edge)
                        v *= static_cast<double>(n_active - 1 - i) / static_cast<double>(edge);
                }
                s[start + i] = v;
            }
            break;
        }
        case ExcitationKind::sine_sweep_linear:
        case ExcitationKind::sine_sweep_log: {
            double f0 = spec.band_lo_hz;
            double f1 = spec.band_hi_hz;
            if (!(f0 > 0.0 && f1 > 0.0)) throw DataError("sweep band must be positive");
            if (spec.direction == SweepDirection::reverse) std::swap(f0, f1);
            const double T = static_cast<double>(n_active) / sample_rate;
            for (std::size_t i = 0; i < n_active; ++i) {
                const double t = static_cast<double>(i) / sample_rate;
                double phase;
                if (spec.kind == ExcitationKind::sine_sweep_linear) {
                    phase = kTwoPi * (f0 * t + 0.5 * (f1 - f0) * t * t / T);
                } else {
                    const double k = f1 / f0;
                    phase = (k == 1.0) ? kTwoPi * f0 * t
                                       : kTwoPi * f0 * T / std::log(k) *
                                             (std::pow(k, t / T) - 1.0);
                }
                s[start + i] = spec.amplitude * std::sin(phase);
            }
            break;
        }
        case ExcitationKind::multisine_random_phase:
        case ExcitationKind::multisine_odd_phase: {
            const double df = sample_rate / static_cast<double>(n_samples);
            const auto k_lo = static_cast<std::size_t>(std::ceil(spec.band_lo_hz / df - 1e-9));
            const auto k_hi = static_cast<std::size_t>(std::floor(spec.band_hi_hz / df + 1e-9));
            if (k_lo < 1 || k_hi < k_lo || k_hi > n_samples / 2)
                throw DataError("multisine band holds no usable FFT bins");
            std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
            std::vector<double> amp, phase, lines;
            for (std::size_t k = k_lo; k <= k_hi; ++k) {
                amp.push_back(spec.amplitude);
                phase.push_back(uniform(rng));
                lines.push_back(static_cast<double>(k) * df);
            }
            if (spec.kind == ExcitationKind::multisine_odd_phase) {
                // Alternate lines silenced, first (1-based odd) line included.
                for (std::size_t i = 0; i < amp.size(); i += 2) {
                    amp[i] = 0.0;
                    phase[i] = 0.0;
                }
            }
            return multisine(amp, phase, lines, n_samples, sample_rate, spec.units);
        }
    }
    return TimeSeriesRecord(std::move(s), sample_rate, "drive", spec.units);
}

}  // namespace modalkit::oracle
