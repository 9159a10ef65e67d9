#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "modalkit/types.hpp"

namespace modalkit::spectral {

/// Forward real-to-complex FFT. Returns n/2 + 1 one-sided bins.
std::vector<Complex> rfft(const std::vector<double>& x);

/// Inverse of rfft for a one-sided half spectrum of n/2 + 1 bins.
/// The result is normalized so that irfft(rfft(x), n) == x.
std::vector<double> irfft(const std::vector<Complex>& half, std::size_t n);

/// Time signal of length n built as sum_k A_k sin(2 pi k t / n + phi_k),
/// where k indexes FFT bins (bin 0 ignored, amplitudes indexed by bin).
std::vector<double> synthesize_multisine(const std::vector<double>& amplitude_per_bin,
                                         const std::vector<double>& phase_per_bin,
                                         std::size_t n_samples);

/// One-sided periodogram PSD of the whole record (rectangular window),
/// spacing fs/n, units x^2/Hz.
std::pair<FrequencyGrid, std::vector<double>> periodogram(const std::vector<double>& x,
                                                          double sample_rate);

struct WelchConfig {
    std::size_t segment_length = 0;  // 0 -> length/8
    double overlap = 0.5;
    bool hann = true;
};

/// Welch-averaged one-sided auto PSD.
std::pair<FrequencyGrid, std::vector<double>> welch_psd(const std::vector<double>& x,
                                                        double sample_rate,
                                                        const WelchConfig& cfg = {});

/// Welch-averaged one-sided cross spectral density S_xy (conj(X) * Y scaling).
std::pair<FrequencyGrid, std::vector<Complex>> welch_csd(const std::vector<double>& x,
                                                         const std::vector<double>& y,
                                                         double sample_rate,
                                                         const WelchConfig& cfg = {});

/// Welch-averaged cross spectral density matrix of a multichannel record.
/// Returns one Hermitian c x c matrix per frequency line.
std::pair<FrequencyGrid, std::vector<Eigen::MatrixXcd>> welch_csd_matrix(
    const Eigen::MatrixXd& channels_by_row, double sample_rate, const WelchConfig& cfg = {});

/// Linear-phase low-pass FIR taps (Kaiser windowed sinc).
/// cutoff_norm is the -6 dB point as a fraction of Nyquist; the stopband
/// reaches `attenuation_db` at cutoff_norm + transition_norm / 2.
std::vector<double> design_lowpass_fir(double cutoff_norm, double transition_norm,
                                       double attenuation_db);

/// Causal FIR filtering, output length matches input (zero initial state).
std::vector<double> fir_filter(const std::vector<double>& taps, const std::vector<double>& x);

/// Anti-aliased decimation by an integer factor. The low-pass stopband
/// begins at 0.8x the decimated Nyquist with >= 50 dB attenuation; the
/// leading filter transient is dropped before downsampling.
std::vector<double> decimate(const std::vector<double>& x, int factor);

/// Tap count of the decimation anti-alias filter (1 for factor 1). The
/// filtered output is a moving average of this many input samples, which
/// bounds the span of filter-induced correlation.
std::size_t decimation_filter_length(int factor);

/// Smallest decimated lag from which the anti-alias filter's normalized
/// autocorrelation tail stays below `tolerance` (0 for factor 1). Lagged
/// covariances beyond this gap are free of filter-induced correlation.
int decimation_correlation_gap(int factor, double tolerance = 0.08);

/// Modified Bessel function I0 (used by the Kaiser window).
double bessel_i0(double x);

}  // namespace modalkit::spectral
