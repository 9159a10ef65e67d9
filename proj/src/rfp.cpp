#include "modalkit/rfp.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>

namespace modalkit::rfp {

void RfpConfig::validate() const {
    if (n_modes < 1) throw UsageError("n_modes must be >= 1");
    if (extra_numerator_terms < 0) throw UsageError("extra_numerator_terms must be >= 0");
    if (!bands) return;
    if (bands->empty()) throw UsageError("band list must be non-empty when present");
    double prev_upper = -1.0;
    for (const auto& b : *bands) {
        if (!(b.lower_hz < b.upper_hz)) throw UsageError("band bounds must satisfy lower < upper");
        if (b.modes_in_band < 1) throw UsageError("band must expect at least one mode");
        if (b.lower_hz < prev_upper) throw UsageError("bands must be ascending and non-overlapping");
        prev_upper = b.upper_hz;
    }
}

namespace {

// Polynomial root finding through the companion matrix of the monic form.
std::vector<Complex> monic_roots(const std::vector<double>& coeffs_ascending) {
    const auto n = static_cast<Eigen::Index>(coeffs_ascending.size());
    if (n == 0) return {};
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -coeffs_ascending[static_cast<std::size_t>(i)];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<Complex> roots(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return roots;
}

Complex horner(const std::vector<double>& coeffs_ascending, Complex x) {
    Complex acc(0.0, 0.0);
    for (auto it = coeffs_ascending.rbegin(); it != coeffs_ascending.rend(); ++it)
        acc = acc * x + *it;
    return acc;
}

struct Bases {
    Eigen::MatrixXcd P;  // numerator monomials
    Eigen::MatrixXcd B;  // denominator monomials times measured FRF
    Eigen::VectorXcd w;  // lead denominator term times measured FRF
    double w_max = 0.0;
};

// Monomial bases in the scaled variable s / w_max; raw rad/s powers are
// numerically singular at realistic bandwidths.
Bases build_bases(const Frf& frf, int n, int m) {
    const auto L = static_cast<Eigen::Index>(frf.size());
    Bases bases;
    for (std::size_t i = 0; i < frf.size(); ++i)
        bases.w_max = std::max(bases.w_max, kTwoPi * frf.grid[i]);
    if (!(bases.w_max > 0.0)) throw DataError("fit band has no positive frequencies");

    bases.P.resize(L, m + 1);
    bases.B.resize(L, n);
    bases.w.resize(L);
    for (Eigen::Index i = 0; i < L; ++i) {
        const Complex s(0.0, kTwoPi * frf.grid[static_cast<std::size_t>(i)] / bases.w_max);
        const Complex h = frf.values[static_cast<std::size_t>(i)];
        Complex p(1.0, 0.0);
        for (int k = 0; k <= m; ++k) {
            bases.P(i, k) = p;
            if (k < n) bases.B(i, k) = p * h;
            p *= s;
        }
        Complex sn(1.0, 0.0);
        for (int k = 0; k < n; ++k) sn *= s;
        bases.w(i) = sn * h;
    }
    return bases;
}

Eigen::MatrixXd assemble_normal_matrix(const Bases& bases) {
    const auto m1 = bases.P.cols();
    const auto n = bases.B.cols();
    Eigen::MatrixXd M(m1 + n, m1 + n);
    M.topLeftCorner(m1, m1) = (bases.P.adjoint() * bases.P).real();
    M.topRightCorner(m1, n) = -(bases.P.adjoint() * bases.B).real();
    M.bottomLeftCorner(n, m1) = M.topRightCorner(m1, n).transpose();
    M.bottomRightCorner(n, n) = (bases.B.adjoint() * bases.B).real();
    return M;
}

RfpResult fit_core(const Frf& frf, int n_modes, int extra_terms,
                   std::optional<std::pair<double, double>> band) {
    const auto L = static_cast<Eigen::Index>(frf.size());
    const int n = 2 * n_modes;       // denominator order
    const int m = n + extra_terms;   // numerator order
    if (L < static_cast<Eigen::Index>(2 * n_modes + extra_terms + 2))
        throw DataError("not enough frequency lines for the requested polynomial orders");

    const Bases bases = build_bases(frf, n, m);
    const double w_max = bases.w_max;

    const Eigen::Index dim = m + 1 + n;
    const Eigen::MatrixXd M = assemble_normal_matrix(bases);
    Eigen::VectorXd rhs(dim);
    rhs.head(m + 1) = (bases.P.adjoint() * bases.w).real();
    rhs.tail(n) = -(bases.B.adjoint() * bases.w).real();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double s_max = svd.singularValues()(0);
    const double s_min = svd.singularValues()(dim - 1);
    const double cond = s_min > 0.0 ? s_max / s_min : std::numeric_limits<double>::infinity();
    if (!(s_min > s_max * 1e-14))
        throw ConditioningError("singular rational-fraction normal equations", cond);
    const Eigen::VectorXd x = svd.solve(rhs);

    RfpResult result;
    result.condition_estimate = cond;
    result.freq_scale = w_max;
    result.band = band;
    result.numerator_scaled.assign(x.data(), x.data() + m + 1);
    result.denominator_scaled.assign(x.data() + m + 1, x.data() + dim);
    result.denominator_scaled.push_back(1.0);  // imposed monic constraint

    // Residual e'e with e_i = num(s_i) - den(s_i) H_i in the scaled variable.
    double j_val = 0.0;
    for (Eigen::Index i = 0; i < L; ++i) {
        const Complex s(0.0, kTwoPi * frf.grid[static_cast<std::size_t>(i)] / w_max);
        const Complex e = horner(result.numerator_scaled, s) -
                          horner(result.denominator_scaled, s) *
                              frf.values[static_cast<std::size_t>(i)];
        j_val += std::norm(e);
    }
    result.fit_residual = j_val;

    // Undo the frequency scaling: multiply both polynomials by w_max^n so the
    // denominator lead coefficient stays exactly 1.
    result.numerator_coeffs.resize(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k)
        result.numerator_coeffs[static_cast<std::size_t>(k)] =
            result.numerator_scaled[static_cast<std::size_t>(k)] *
            std::pow(w_max, static_cast<double>(n - k));
    result.denominator_coeffs.resize(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k < n; ++k)
        result.denominator_coeffs[static_cast<std::size_t>(k)] =
            result.denominator_scaled[static_cast<std::size_t>(k)] *
            std::pow(w_max, static_cast<double>(n - k));
    result.denominator_coeffs[static_cast<std::size_t>(n)] = 1.0;

    std::vector<double> monic(result.denominator_scaled.begin(),
                              result.denominator_scaled.end() - 1);
    const auto scaled_roots = monic_roots(monic);
    result.raw_poles.reserve(scaled_roots.size());
    for (const auto& r : scaled_roots) result.raw_poles.push_back(r * w_max);

    auto classified = classify_poles(result.raw_poles);
    result.discarded = std::move(classified.discarded);
    std::vector<Mode> kept;
    for (const auto& mode : classified.modal.modes()) {
        if (band && (mode.natural_frequency_hz < band->first ||
                     mode.natural_frequency_hz > band->second)) {
            const double wr = kTwoPi * mode.natural_frequency_hz;
            const double re = -mode.damping_ratio * wr;
            const double im = wr * std::sqrt(1.0 - mode.damping_ratio * mode.damping_ratio);
            result.discarded.push_back({Pole{Complex(re, im)}, PoleDiscardReason::out_of_band});
            continue;
        }
        kept.push_back(mode);
    }
    result.modal = ModalParameterSet::from_modes(std::move(kept));
    result.no_admissible_modes = result.modal.empty();
    return result;
}

}  // namespace

RfpResult fit_global(const Frf& frf, const RfpConfig& config) {
    config.validate();
    return fit_core(frf, config.n_modes, config.extra_numerator_terms, std::nullopt);
}

std::vector<RfpResult> fit_banded(const Frf& frf, const RfpConfig& config) {
    config.validate();
    if (!config.bands) throw UsageError("banded fit requires a band list");
    std::vector<RfpResult> results;
    results.reserve(config.bands->size());
    for (const auto& band : *config.bands) {
        if (band.lower_hz < frf.grid.front() || band.upper_hz > frf.grid.back())
            throw DataError("band [" + std::to_string(band.lower_hz) + ", " +
                            std::to_string(band.upper_hz) + "] outside FRF grid range");
        const auto idx = frf.grid.band_indices(band.lower_hz, band.upper_hz);
        if (idx.empty())
            throw DataError("band [" + std::to_string(band.lower_hz) + ", " +
                            std::to_string(band.upper_hz) + "] contains no frequency lines");
        results.push_back(fit_core(frf.restrict(band.lower_hz, band.upper_hz),
                                   band.modes_in_band, config.extra_numerator_terms,
                                   std::make_pair(band.lower_hz, band.upper_hz)));
    }
    return results;
}

Frf reconstruct_frf(const RfpResult& result, const FrequencyGrid& grid) {
    if (result.band &&
        (grid.front() < result.band->first || grid.back() > result.band->second))
        throw DataError("reconstruction grid extends outside the fitted band");
    std::vector<Complex> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Complex s(0.0, kTwoPi * grid[i] / result.freq_scale);
        values[i] = horner(result.numerator_scaled, s) / horner(result.denominator_scaled, s);
    }
    return Frf(grid, std::move(values));
}

double fit_objective(const RfpResult& result, const Frf& frf) {
    double j_val = 0.0;
    for (std::size_t i = 0; i < frf.size(); ++i) {
        const Complex s(0.0, kTwoPi * frf.grid[i] / result.freq_scale);
        const Complex e = horner(result.numerator_scaled, s) -
                          horner(result.denominator_scaled, s) * frf.values[i];
        j_val += std::norm(e);
    }
    return j_val;
}

Eigen::MatrixXd normal_equations_matrix(const Frf& frf, const RfpConfig& config) {
    config.validate();
    const int n = 2 * config.n_modes;
    return assemble_normal_matrix(build_bases(frf, n, n + config.extra_numerator_terms));
}

std::vector<Band> load_band_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open band table: " + path);
    std::vector<Band> bands;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        for (auto& ch : line)
            if (ch == ',' || ch == '\t') ch = ' ';
        std::istringstream ss(line);
        Band b;
        if (!(ss >> b.lower_hz)) continue;  // blank line
        if (!(ss >> b.upper_hz >> b.modes_in_band))
            throw UsageError("band table line " + std::to_string(line_no) +
                             ": expected 'lower_hz upper_hz modes'");
        bands.push_back(b);
    }
    if (bands.empty()) throw UsageError("band table is empty: " + path);
    return bands;
}

}  // namespace modalkit::rfp
