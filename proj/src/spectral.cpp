#include "modalkit/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace modalkit::spectral {

namespace {

// FFTW planning is not thread-safe; execution of a plan on its own arrays is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    double* real = nullptr;
    fftw_complex* cplx = nullptr;
    std::size_t n = 0;

    FftwBuffer(std::size_t n_real, std::size_t n_cplx) : n(n_real) {
        real = fftw_alloc_real(n_real);
        cplx = fftw_alloc_complex(n_cplx);
    }
    ~FftwBuffer() {
        fftw_free(real);
        fftw_free(cplx);
    }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

}  // namespace

std::vector<Complex> rfft(const std::vector<double>& x) {
    if (x.empty()) throw DataError("rfft: empty input");
    const std::size_t n = x.size();
    const std::size_t nh = n / 2 + 1;
    FftwBuffer buf(n, nh);
    std::copy(x.begin(), x.end(), buf.real);
    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf.real, buf.cplx, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<Complex> out(nh);
    for (std::size_t i = 0; i < nh; ++i) out[i] = Complex(buf.cplx[i][0], buf.cplx[i][1]);
    return out;
}

std::vector<double> irfft(const std::vector<Complex>& half, std::size_t n) {
    if (half.size() != n / 2 + 1) throw DataError("irfft: half spectrum length mismatch");
    FftwBuffer buf(n, half.size());
    for (std::size_t i = 0; i < half.size(); ++i) {
        buf.cplx[i][0] = half[i].real();
        buf.cplx[i][1] = half[i].imag();
    }
    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), buf.cplx, buf.real, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<double> out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf.real[i] * scale;
    return out;
}

std::vector<double> synthesize_multisine(const std::vector<double>& amplitude_per_bin,
                                         const std::vector<double>& phase_per_bin,
                                         std::size_t n_samples) {
    if (amplitude_per_bin.size() != phase_per_bin.size())
        throw DataError("multisine: amplitude/phase length mismatch");
    const std::size_t nh = n_samples / 2 + 1;
    if (amplitude_per_bin.size() > nh)
        throw DataError("multisine: more spectral lines than FFT bins");
    // A sin(theta + phi) = Re(A e^{i(phi - pi/2)} e^{i theta}); the c2r
    // transform contributes the conjugate bin, hence the factor 1/2.
    std::vector<Complex> half(nh, Complex(0.0, 0.0));
    for (std::size_t k = 1; k < amplitude_per_bin.size(); ++k) {
        if (amplitude_per_bin[k] == 0.0) continue;
        half[k] = 0.5 * amplitude_per_bin[k] *
                  std::exp(Complex(0.0, phase_per_bin[k] - 0.5 * kPi));
    }
    // Unnormalized c2r gives exactly the sum of sines.
    auto x = irfft(half, n_samples);
    for (auto& v : x) v *= static_cast<double>(n_samples);
    return x;
}

std::pair<FrequencyGrid, std::vector<double>> periodogram(const std::vector<double>& x,
                                                          double sample_rate) {
    const std::size_t n = x.size();
    auto spec = rfft(x);
    const double scale = 1.0 / (sample_rate * static_cast<double>(n));
    std::vector<double> psd(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        double p = std::norm(spec[i]) * scale;
        if (i != 0 && !(n % 2 == 0 && i == spec.size() - 1)) p *= 2.0;  // one-sided
        psd[i] = p;
    }
    return {FrequencyGrid::uniform(0.0, sample_rate / static_cast<double>(n), spec.size()),
            std::move(psd)};
}

namespace {

struct SegmentPlan {
    std::size_t nseg;
    std::size_t step;
    std::size_t count;
    std::vector<double> window;
    double window_power;  // sum w^2
};

SegmentPlan plan_segments(std::size_t n, const WelchConfig& cfg) {
    std::size_t nseg = cfg.segment_length ? cfg.segment_length : std::max<std::size_t>(n / 8, 16);
    nseg = std::min(nseg, n);
    std::size_t step = static_cast<std::size_t>(
        std::max(1.0, std::floor(static_cast<double>(nseg) * (1.0 - cfg.overlap))));
    std::size_t count = (n - nseg) / step + 1;
    std::vector<double> w =
        cfg.hann ? hann_window(nseg) : std::vector<double>(nseg, 1.0);
    double wp = 0.0;
    for (double v : w) wp += v * v;
    return {nseg, step, count, std::move(w), wp};
}

}  // namespace

std::pair<FrequencyGrid, std::vector<double>> welch_psd(const std::vector<double>& x,
                                                        double sample_rate,
                                                        const WelchConfig& cfg) {
    auto [grid, csd] = welch_csd(x, x, sample_rate, cfg);
    std::vector<double> psd(csd.size());
    for (std::size_t i = 0; i < csd.size(); ++i) psd[i] = csd[i].real();
    return {grid, std::move(psd)};
}

std::pair<FrequencyGrid, std::vector<Complex>> welch_csd(const std::vector<double>& x,
                                                         const std::vector<double>& y,
                                                         double sample_rate,
                                                         const WelchConfig& cfg) {
    if (x.size() != y.size()) throw DataError("welch_csd: length mismatch");
    const auto plan = plan_segments(x.size(), cfg);
    const std::size_t nh = plan.nseg / 2 + 1;
    std::vector<Complex> acc(nh, Complex(0.0, 0.0));
    std::vector<double> bx(plan.nseg), by(plan.nseg);
    for (std::size_t s = 0; s < plan.count; ++s) {
        const std::size_t off = s * plan.step;
        for (std::size_t i = 0; i < plan.nseg; ++i) {
            bx[i] = x[off + i] * plan.window[i];
            by[i] = y[off + i] * plan.window[i];
        }
        auto X = rfft(bx);
        auto Y = rfft(by);
        for (std::size_t i = 0; i < nh; ++i) acc[i] += std::conj(X[i]) * Y[i];
    }
    const double scale = 1.0 / (sample_rate * plan.window_power * static_cast<double>(plan.count));
    for (std::size_t i = 0; i < nh; ++i) {
        double f = scale;
        if (i != 0 && !(plan.nseg % 2 == 0 && i == nh - 1)) f *= 2.0;
        acc[i] *= f;
    }
    return {FrequencyGrid::uniform(0.0, sample_rate / static_cast<double>(plan.nseg), nh),
            std::move(acc)};
}

std::pair<FrequencyGrid, std::vector<Eigen::MatrixXcd>> welch_csd_matrix(
    const Eigen::MatrixXd& channels_by_row, double sample_rate, const WelchConfig& cfg) {
    const auto c = static_cast<std::size_t>(channels_by_row.rows());
    const auto n = static_cast<std::size_t>(channels_by_row.cols());
    if (c == 0 || n == 0) throw DataError("welch_csd_matrix: empty input");
    const auto plan = plan_segments(n, cfg);
    const std::size_t nh = plan.nseg / 2 + 1;

    std::vector<Eigen::MatrixXcd> acc(nh, Eigen::MatrixXcd::Zero(c, c));
    Eigen::MatrixXcd spectra(c, nh);
    std::vector<double> buf(plan.nseg);
    for (std::size_t s = 0; s < plan.count; ++s) {
        const std::size_t off = s * plan.step;
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t i = 0; i < plan.nseg; ++i)
                buf[i] = channels_by_row(static_cast<Eigen::Index>(ch),
                                         static_cast<Eigen::Index>(off + i)) *
                         plan.window[i];
            auto X = rfft(buf);
            for (std::size_t i = 0; i < nh; ++i)
                spectra(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) = X[i];
        }
        for (std::size_t i = 0; i < nh; ++i) {
            const auto col = spectra.col(static_cast<Eigen::Index>(i));
            acc[i] += col * col.adjoint();
        }
    }
    const double scale = 1.0 / (sample_rate * plan.window_power * static_cast<double>(plan.count));
    for (std::size_t i = 0; i < nh; ++i) {
        double f = scale;
        if (i != 0 && !(plan.nseg % 2 == 0 && i == nh - 1)) f *= 2.0;
        acc[i] *= f;
    }
    return {FrequencyGrid::uniform(0.0, sample_rate / static_cast<double>(plan.nseg), nh),
            std::move(acc)};
}

double bessel_i0(double x) {
    // Power series; converges quickly for the argument range of Kaiser betas.
    double sum = 1.0, term = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

std::vector<double> design_lowpass_fir(double cutoff_norm, double transition_norm,
                                       double attenuation_db) {
    if (!(cutoff_norm > 0.0 && cutoff_norm < 1.0))
        throw DataError("FIR cutoff must lie in (0, 1) of Nyquist");
    const double a = attenuation_db;
    const double beta = a > 50.0   ? 0.1102 * (a - 8.7)
                        : a > 21.0 ? 0.5842 * std::pow(a - 21.0, 0.4) + 0.07886 * (a - 21.0)
                                   : 0.0;
    // Kaiser tap estimate; transition given as a fraction of Nyquist.
    const double dw = kPi * transition_norm;
    std::size_t taps = static_cast<std::size_t>(std::ceil((a - 8.0) / (2.285 * dw))) + 1;
    if (taps % 2 == 0) ++taps;  // odd length, linear phase type I

    const double wc = kPi * cutoff_norm;
    const auto m = static_cast<double>(taps - 1);
    std::vector<double> h(taps);
    const double i0b = bessel_i0(beta);
    for (std::size_t i = 0; i < taps; ++i) {
        const double k = static_cast<double>(i) - 0.5 * m;
        const double sinc = (k == 0.0) ? wc / kPi : std::sin(wc * k) / (kPi * k);
        const double r = 2.0 * static_cast<double>(i) / m - 1.0;
        const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[i] = sinc * win;
    }
    // Normalize DC gain to exactly 1.
    double s = 0.0;
    for (double v : h) s += v;
    for (double& v : h) v /= s;
    return h;
}

std::vector<double> fir_filter(const std::vector<double>& taps, const std::vector<double>& x) {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double acc = 0.0;
        const std::size_t kmax = std::min(taps.size() - 1, i);
        for (std::size_t k = 0; k <= kmax; ++k) acc += taps[k] * x[i - k];
        y[i] = acc;
    }
    return y;
}

namespace {

std::vector<double> decimation_taps(int factor) {
    const double d = static_cast<double>(factor);
    // Passband to 0.8 of the decimated Nyquist, stopband from the decimated
    // Nyquist itself: anything that could alias into the kept band is at
    // least 50 dB down, while in-band content stays untouched.
    const double pass_edge = 0.8 / d;
    const double stop_edge = 1.0 / d;
    const double transition = stop_edge - pass_edge;
    return design_lowpass_fir(pass_edge + 0.5 * transition, transition, 50.0);
}

}  // namespace

std::size_t decimation_filter_length(int factor) {
    if (factor < 1) throw DataError("decimation factor must be >= 1");
    if (factor == 1) return 1;
    return decimation_taps(factor).size();
}

int decimation_correlation_gap(int factor, double tolerance) {
    if (factor < 1) throw DataError("decimation factor must be >= 1");
    if (factor == 1) return 0;
    const auto taps = decimation_taps(factor);
    double r0 = 0.0;
    for (double t : taps) r0 += t * t;

    const int max_lag = static_cast<int>(taps.size()) / factor + 1;
    std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (int k = 1; k <= max_lag; ++k) {
        const auto shift = static_cast<std::size_t>(k * factor);
        double r = 0.0;
        for (std::size_t i = 0; i + shift < taps.size(); ++i) r += taps[i] * taps[i + shift];
        acf[static_cast<std::size_t>(k)] = std::abs(r) / r0;
    }
    for (int k = 1; k <= max_lag; ++k) {
        double tail = 0.0;
        for (int j = k; j <= max_lag; ++j) tail = std::max(tail, acf[static_cast<std::size_t>(j)]);
        if (tail <= tolerance) return k;
    }
    return max_lag + 1;
}

std::vector<double> decimate(const std::vector<double>& x, int factor) {
    if (factor < 1) throw DataError("decimation factor must be >= 1");
    if (factor == 1) return x;
    const auto taps = decimation_taps(factor);
    auto y = fir_filter(taps, x);
    const std::size_t skip = taps.size();  // drop warm-up transient
    if (y.size() <= skip) throw DataError("record too short for decimation filter");
    std::vector<double> out;
    out.reserve((y.size() - skip) / static_cast<std::size_t>(factor) + 1);
    for (std::size_t i = skip; i < y.size(); i += static_cast<std::size_t>(factor))
        out.push_back(y[i]);
    return out;
}

}  // namespace modalkit::spectral
