#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "modalkit/errors.hpp"

namespace modalkit {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

using Complex = std::complex<double>;

/// Strictly increasing, uniformly spaced frequency axis in Hz.
class FrequencyGrid {
 public:
    /// Empty placeholder; populated grids come from the named constructors.
    FrequencyGrid() = default;

    /// Build a grid start, start + spacing, ... with `count` points.
    static FrequencyGrid uniform(double start_hz, double spacing_hz, std::size_t count);

    /// Validate an explicit frequency vector (uniform within 1e-9 relative).
    static FrequencyGrid from_values(std::vector<double> values_hz);

    const std::vector<double>& values() const { return values_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }

    /// Indices of the lines lying inside [lo_hz, hi_hz] (inclusive).
    std::vector<std::size_t> band_indices(double lo_hz, double hi_hz) const;

    /// Sub-grid restricted to [lo_hz, hi_hz]. Throws DataError if empty.
    FrequencyGrid restrict(double lo_hz, double hi_hz) const;

    bool operator==(const FrequencyGrid& other) const { return values_ == other.values_; }

 private:
    FrequencyGrid(std::vector<double> values, double spacing)
        : values_(std::move(values)), spacing_(spacing) {}

    std::vector<double> values_;
    double spacing_ = 0.0;
};

/// Complex accelerance frequency response samples (g/N) on a grid,
/// with optional per-line coherence.
struct Frf {
    FrequencyGrid grid;
    std::vector<Complex> values;
    std::optional<std::vector<double>> coherence;
    std::string input_channel;
    std::string output_channel;

    Frf(FrequencyGrid g, std::vector<Complex> v, std::string in_ch = "", std::string out_ch = "");

    /// Attach coherence; every element must lie in [0, 1].
    void set_coherence(std::vector<double> c);

    std::size_t size() const { return values.size(); }

    /// FRF restricted to the lines inside [lo_hz, hi_hz].
    Frf restrict(double lo_hz, double hi_hz) const;
};

enum class SignalUnit { g, newton, volt };

std::string to_string(SignalUnit u);
SignalUnit signal_unit_from_string(const std::string& s);

/// Uniformly sampled real signal with channel metadata.
struct TimeSeriesRecord {
    std::vector<double> samples;
    double sample_rate = 0.0;  // Hz
    std::string channel;
    SignalUnit units = SignalUnit::volt;

    TimeSeriesRecord() = default;
    TimeSeriesRecord(std::vector<double> s, double fs, std::string ch, SignalUnit u);

    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Continuous-time pole (rad/s).
struct Pole {
    Complex value;
};

struct Mode {
    double natural_frequency_hz = 0.0;
    double damping_ratio = 0.0;
    double residue = 0.0;  // signed scalar per input/output pair
};

/// Oscillatory modes sorted by natural frequency. Enforces f > 0 and
/// 0 <= zeta < 1 for every entry.
class ModalParameterSet {
 public:
    ModalParameterSet() = default;
    static ModalParameterSet from_modes(std::vector<Mode> modes);

    const std::vector<Mode>& modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }
    bool empty() const { return modes_.empty(); }
    const Mode& operator[](std::size_t i) const { return modes_[i]; }

    std::vector<double> natural_frequencies_hz() const;
    std::vector<double> damping_ratios() const;
    double highest_frequency_hz() const;

 private:
    std::vector<Mode> modes_;
};

struct PoleModal {
    double natural_frequency_hz = 0.0;
    double damping_ratio = 0.0;
};

/// Natural frequency and damping ratio of a continuous-time pole:
/// omega = |p| (reported in Hz), zeta = -Re(p)/|p|.
/// Throws DataError for a zero-magnitude (degenerate) pole.
PoleModal pole_to_modal(const Pole& pole);

/// Why a raw denominator root / eigenvalue was not kept as a mode.
enum class PoleDiscardReason {
    nonpositive_imaginary,  // real axis or lower half plane
    overdamped,             // zeta >= 1
    negative_damping,       // zeta < 0
    degenerate,             // |pole| == 0
    out_of_band,            // admissible but outside the fitted band
};

std::string to_string(PoleDiscardReason r);

struct DiscardedPole {
    Pole pole;
    PoleDiscardReason reason;
};

struct PoleClassification {
    ModalParameterSet modal;               // admissible oscillatory modes
    std::vector<DiscardedPole> discarded;  // computational poles with reasons
};

/// Split raw continuous-time poles into admissible modes (Im > 0,
/// 0 <= zeta < 1) and discarded computational poles. Residues of the
/// resulting modes are zero; identification does not recover them.
PoleClassification classify_poles(const std::vector<Complex>& poles);

}  // namespace modalkit
