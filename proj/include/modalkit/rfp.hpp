#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "modalkit/types.hpp"

namespace modalkit::rfp {

/// One fitting band: frequency range and the number of modes expected in it.
struct Band {
    double lower_hz = 0.0;
    double upper_hz = 0.0;
    int modes_in_band = 0;
};

struct RfpConfig {
    int n_modes = 1;                  // denominator order = 2 * n_modes
    int extra_numerator_terms = 6;    // out-of-band compensation terms
    std::optional<std::vector<Band>> bands;

    void validate() const;
};

/// Result of one rational-fraction fit. Coefficients are stored in
/// ascending powers of (j w); the denominator lead coefficient is exactly 1.
/// The scaled coefficient vectors live in the normalized variable
/// s / freq_scale used during the solve and are the numerically stable
/// representation for evaluation.
struct RfpResult {
    ModalParameterSet modal;
    std::vector<double> numerator_coeffs;
    std::vector<double> denominator_coeffs;
    double fit_residual = 0.0;  // e'e of the scaled-domain error vector
    std::optional<std::pair<double, double>> band;

    double freq_scale = 1.0;  // rad/s mapped to 1 during the solve
    std::vector<double> numerator_scaled;
    std::vector<double> denominator_scaled;

    std::vector<Complex> raw_poles;  // all denominator roots, rad/s
    std::vector<DiscardedPole> discarded;
    double condition_estimate = 0.0;
    bool no_admissible_modes = false;
};

/// Least-squares rational-fraction fit over every line of the FRF.
/// Solves the real block normal equations for the numerator/denominator
/// coefficients and extracts modes from the denominator roots.
RfpResult fit_global(const Frf& frf, const RfpConfig& config);

/// Banded fit: one rational-fraction solve per configured band, keeping
/// only the poles whose natural frequency falls inside the band.
std::vector<RfpResult> fit_banded(const Frf& frf, const RfpConfig& config);

/// Evaluate the fitted rational function on a grid. For banded results the
/// grid must stay inside the band.
Frf reconstruct_frf(const RfpResult& result, const FrequencyGrid& grid);

/// Squared-error objective of a fit re-evaluated against a measured FRF on
/// the fit's scaled basis (the quantity stored in fit_residual).
double fit_objective(const RfpResult& result, const Frf& frf);

/// Parse a band table: one "lower_hz upper_hz modes" row per line,
/// comma or whitespace separated, '#' comments.
std::vector<Band> load_band_table(const std::string& path);

/// Assembled real block normal-equations matrix for the given FRF and
/// orders (diagnostic; symmetric positive semi-definite by construction).
Eigen::MatrixXd normal_equations_matrix(const Frf& frf, const RfpConfig& config);

}  // namespace modalkit::rfp
