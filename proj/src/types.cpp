#include "modalkit/types.hpp"

#include <algorithm>
#include <cmath>

namespace modalkit {

FrequencyGrid FrequencyGrid::uniform(double start_hz, double spacing_hz, std::size_t count) {
    if (count == 0) throw DataError("frequency grid must be non-empty");
    if (start_hz < 0.0) throw DataError("frequency grid values must be >= 0");
    if (count > 1 && spacing_hz <= 0.0) throw DataError("frequency grid spacing must be > 0");
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = start_hz + spacing_hz * static_cast<double>(i);
    return FrequencyGrid(std::move(v), count > 1 ? spacing_hz : 0.0);
}

FrequencyGrid FrequencyGrid::from_values(std::vector<double> values_hz) {
    if (values_hz.empty()) throw DataError("frequency grid must be non-empty");
    if (values_hz.front() < 0.0) throw DataError("frequency grid values must be >= 0");
    if (values_hz.size() == 1) return FrequencyGrid(std::move(values_hz), 0.0);

    const double span = values_hz.back() - values_hz.front();
    const double spacing = span / static_cast<double>(values_hz.size() - 1);
    if (spacing <= 0.0) throw DataError("frequency grid must be strictly increasing");
    for (std::size_t i = 1; i < values_hz.size(); ++i) {
        const double d = values_hz[i] - values_hz[i - 1];
        if (d <= 0.0) throw DataError("frequency grid must be strictly increasing");
        if (std::abs(d - spacing) > 1e-9 * spacing)
            throw DataError("frequency grid spacing is not uniform");
    }
    return FrequencyGrid(std::move(values_hz), spacing);
}

std::vector<std::size_t> FrequencyGrid::band_indices(double lo_hz, double hi_hz) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i] >= lo_hz && values_[i] <= hi_hz) idx.push_back(i);
    return idx;
}

FrequencyGrid FrequencyGrid::restrict(double lo_hz, double hi_hz) const {
    const auto idx = band_indices(lo_hz, hi_hz);
    if (idx.empty()) throw DataError("no frequency lines inside requested band");
    std::vector<double> v;
    v.reserve(idx.size());
    for (auto i : idx) v.push_back(values_[i]);
    return FrequencyGrid::from_values(std::move(v));
}

Frf::Frf(FrequencyGrid g, std::vector<Complex> v, std::string in_ch, std::string out_ch)
    : grid(std::move(g)),
      values(std::move(v)),
      input_channel(std::move(in_ch)),
      output_channel(std::move(out_ch)) {
    if (values.size() != grid.size())
        throw DataError("FRF value count does not match frequency grid");
}

void Frf::set_coherence(std::vector<double> c) {
    if (c.size() != values.size()) throw DataError("coherence length does not match FRF");
    for (double x : c)
        if (!(x >= 0.0 && x <= 1.0)) throw DataError("coherence values must lie in [0, 1]");
    coherence = std::move(c);
}

Frf Frf::restrict(double lo_hz, double hi_hz) const {
    const auto idx = grid.band_indices(lo_hz, hi_hz);
    if (idx.empty()) throw DataError("no frequency lines inside requested band");
    std::vector<double> f;
    std::vector<Complex> v;
    f.reserve(idx.size());
    v.reserve(idx.size());
    for (auto i : idx) {
        f.push_back(grid[i]);
        v.push_back(values[i]);
    }
    Frf out(FrequencyGrid::from_values(std::move(f)), std::move(v), input_channel,
            output_channel);
    if (coherence) {
        std::vector<double> c;
        c.reserve(idx.size());
        for (auto i : idx) c.push_back((*coherence)[i]);
        out.set_coherence(std::move(c));
    }
    return out;
}

std::string to_string(SignalUnit u) {
    switch (u) {
        case SignalUnit::g: return "g";
        case SignalUnit::newton: return "N";
        case SignalUnit::volt: return "V";
    }
    return "?";
}

SignalUnit signal_unit_from_string(const std::string& s) {
    if (s == "g") return SignalUnit::g;
    if (s == "N") return SignalUnit::newton;
    if (s == "V") return SignalUnit::volt;
    throw DataError("unknown signal unit: " + s);
}

TimeSeriesRecord::TimeSeriesRecord(std::vector<double> s, double fs, std::string ch, SignalUnit u)
    : samples(std::move(s)), sample_rate(fs), channel(std::move(ch)), units(u) {
    if (sample_rate <= 0.0) throw DataError("sample rate must be > 0");
    if (samples.empty()) throw DataError("time series must be non-empty");
}

ModalParameterSet ModalParameterSet::from_modes(std::vector<Mode> modes) {
    for (const auto& m : modes) {
        if (!(m.natural_frequency_hz > 0.0))
            throw DataError("mode natural frequency must be > 0");
        if (!(m.damping_ratio >= 0.0 && m.damping_ratio < 1.0))
            throw DataError("mode damping ratio must lie in [0, 1)");
    }
    std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
        return a.natural_frequency_hz < b.natural_frequency_hz;
    });
    ModalParameterSet set;
    set.modes_ = std::move(modes);
    return set;
}

std::vector<double> ModalParameterSet::natural_frequencies_hz() const {
    std::vector<double> f;
    f.reserve(modes_.size());
    for (const auto& m : modes_) f.push_back(m.natural_frequency_hz);
    return f;
}

std::vector<double> ModalParameterSet::damping_ratios() const {
    std::vector<double> z;
    z.reserve(modes_.size());
    for (const auto& m : modes_) z.push_back(m.damping_ratio);
    return z;
}

double ModalParameterSet::highest_frequency_hz() const {
    return modes_.empty() ? 0.0 : modes_.back().natural_frequency_hz;
}

PoleModal pole_to_modal(const Pole& pole) {
    const double mag = std::abs(pole.value);
    if (!(mag > 0.0)) throw DataError("degenerate pole: zero magnitude");
    return PoleModal{mag / kTwoPi, -pole.value.real() / mag};
}

std::string to_string(PoleDiscardReason r) {
    switch (r) {
        case PoleDiscardReason::nonpositive_imaginary: return "nonpositive_imaginary";
        case PoleDiscardReason::overdamped: return "overdamped";
        case PoleDiscardReason::negative_damping: return "negative_damping";
        case PoleDiscardReason::degenerate: return "degenerate";
        case PoleDiscardReason::out_of_band: return "out_of_band";
    }
    return "?";
}

PoleClassification classify_poles(const std::vector<Complex>& poles) {
    PoleClassification out;
    std::vector<Mode> kept;
    for (const auto& p : poles) {
        const double mag = std::abs(p);
        if (!(mag > 0.0)) {
            out.discarded.push_back({Pole{p}, PoleDiscardReason::degenerate});
            continue;
        }
        if (p.imag() <= 0.0) {
            out.discarded.push_back({Pole{p}, PoleDiscardReason::nonpositive_imaginary});
            continue;
        }
        const double zeta = -p.real() / mag;
        if (zeta >= 1.0) {
            out.discarded.push_back({Pole{p}, PoleDiscardReason::overdamped});
            continue;
        }
        if (zeta < 0.0) {
            out.discarded.push_back({Pole{p}, PoleDiscardReason::negative_damping});
            continue;
        }
        kept.push_back(Mode{mag / kTwoPi, zeta, 0.0});
    }
    out.modal = ModalParameterSet::from_modes(std::move(kept));
    return out;
}

}  // namespace modalkit
