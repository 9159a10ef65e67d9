#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "modalkit/oracle.hpp"
#include "modalkit/rfp.hpp"

using namespace modalkit;
using namespace modalkit::rfp;
using oracle::SyntheticSystem;
using oracle::frf_from_modal;

namespace {

Frf single_mode_frf() {
    auto sys = SyntheticSystem::from_modal(ModalParameterSet::from_modes({{10.0, 0.02, 1.0}}));
    return frf_from_modal(sys, FrequencyGrid::uniform(0.0, 0.05, 1001));
}

// Expand (s^2 + 2 z1 w1 s + w1^2)(s^2 + 2 z2 w2 s + w2^2) into ascending
// coefficients; hand-rolled oracle for the exact-recovery check.
std::vector<double> quartic_from_modes(double w1, double z1, double w2, double z2) {
    const double a1 = 2.0 * z1 * w1, a0 = w1 * w1;
    const double b1 = 2.0 * z2 * w2, b0 = w2 * w2;
    return {a0 * b0, a0 * b1 + a1 * b0, a0 + a1 * b1 + b0, a1 + b1, 1.0};
}

Complex eval_poly(const std::vector<double>& c, Complex s) {
    Complex acc(0.0, 0.0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
    return acc;
}

}  // namespace

TEST_CASE("global fit recovers a single synthetic mode") {
    RfpConfig config;
    config.n_modes = 1;
    config.extra_numerator_terms = 0;
    auto result = fit_global(single_mode_frf(), config);
    REQUIRE(result.modal.size() == 1);
    CHECK(result.modal[0].natural_frequency_hz == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(result.modal[0].damping_ratio == doctest::Approx(0.02).epsilon(0.02));
    CHECK(result.denominator_coeffs.back() == 1.0);
    CHECK(result.fit_residual >= 0.0);
}

TEST_CASE("exact rational data returns the generating coefficients") {
    const double w1 = kTwoPi * 8.0, z1 = 0.03;
    const double w2 = kTwoPi * 25.0, z2 = 0.01;
    const auto b = quartic_from_modes(w1, z1, w2, z2);
    const std::vector<double> a = {2.0e6, 3.1e4, -1.8e2, 4.7, 0.9};

    auto grid = FrequencyGrid::uniform(0.5, 0.1, 396);
    std::vector<Complex> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Complex s(0.0, kTwoPi * grid[i]);
        values[i] = eval_poly(a, s) / eval_poly(b, s);
    }
    Frf frf(grid, std::move(values));

    RfpConfig config;
    config.n_modes = 2;
    config.extra_numerator_terms = 0;
    auto result = fit_global(frf, config);

    REQUIRE(result.numerator_coeffs.size() == a.size());
    REQUIRE(result.denominator_coeffs.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        CHECK(result.numerator_coeffs[k] == doctest::Approx(a[k]).epsilon(1e-8));
    for (std::size_t k = 0; k < b.size(); ++k)
        CHECK(result.denominator_coeffs[k] == doctest::Approx(b[k]).epsilon(1e-8));

    // Recovered modes are the generating poles.
    REQUIRE(result.modal.size() == 2);
    CHECK(result.modal[0].natural_frequency_hz == doctest::Approx(8.0).epsilon(1e-9));
    CHECK(result.modal[1].damping_ratio == doctest::Approx(0.01).epsilon(1e-7));
}

TEST_CASE("underdetermined systems are rejected") {
    auto frf = single_mode_frf().restrict(9.0, 9.3);  // 7 lines
    RfpConfig config;
    config.n_modes = 2;
    config.extra_numerator_terms = 2;  // needs 2*2 + 2 + 2 = 8 lines
    CHECK_THROWS_AS(fit_global(frf, config), DataError);
}

TEST_CASE("config validation rejects bad bands") {
    RfpConfig config;
    config.n_modes = 1;
    config.bands = std::vector<Band>{{5.0, 9.0, 0}};
    CHECK_THROWS_AS(config.validate(), UsageError);
    config.bands = std::vector<Band>{{5.0, 9.0, 1}, {8.0, 12.0, 1}};
    CHECK_THROWS_AS(config.validate(), UsageError);
    config.bands = std::vector<Band>{{9.0, 5.0, 1}};
    CHECK_THROWS_AS(config.validate(), UsageError);
    config.n_modes = 0;
    config.bands.reset();
    CHECK_THROWS_AS(config.validate(), UsageError);
}

TEST_CASE("banded fit errors") {
    auto frf = single_mode_frf();  // 0 to 50 Hz
    RfpConfig config;
    config.bands = std::vector<Band>{{45.0, 60.0, 1}};
    CHECK_THROWS_AS(fit_banded(frf, config), DataError);  // outside grid

    RfpConfig no_bands;
    CHECK_THROWS_AS(fit_banded(frf, no_bands), UsageError);
}

TEST_CASE("banded fit beats the global fit inside each band") {
    // Measurement noise keeps the global matched-order fit from being exact;
    // the banded fit can then spend its flexibility locally.
    auto sys = SyntheticSystem::from_modal(
        ModalParameterSet::from_modes(
            {{6.0, 0.02, 1.0}, {15.0, 0.01, 0.8}, {38.0, 0.015, 1.2}}),
        1, 0.01, 77);
    auto grid = FrequencyGrid::uniform(0.5, 0.05, 991);  // 0.5 to 50 Hz
    auto frf = frf_from_modal(sys, grid);

    RfpConfig global_cfg;
    global_cfg.n_modes = 3;
    global_cfg.extra_numerator_terms = 0;
    auto global_fit = fit_global(frf, global_cfg);

    RfpConfig banded_cfg;
    banded_cfg.n_modes = 1;
    banded_cfg.extra_numerator_terms = 6;
    banded_cfg.bands = std::vector<Band>{{4.0, 8.0, 1}, {13.0, 17.0, 1}, {35.0, 41.0, 1}};
    auto banded = fit_banded(frf, banded_cfg);
    REQUIRE(banded.size() == 3);

    for (std::size_t bi = 0; bi < banded.size(); ++bi) {
        const auto& band = (*banded_cfg.bands)[bi];
        auto sub = frf.restrict(band.lower_hz, band.upper_hz);
        auto rec_banded = reconstruct_frf(banded[bi], sub.grid);
        auto rec_global = reconstruct_frf(global_fit, sub.grid);
        double err_banded = 0.0, err_global = 0.0;
        for (std::size_t i = 0; i < sub.size(); ++i) {
            err_banded += std::norm(rec_banded.values[i] - sub.values[i]);
            err_global += std::norm(rec_global.values[i] - sub.values[i]);
        }
        CHECK(err_banded <= err_global + 1e-12);

        REQUIRE(banded[bi].modal.size() == 1);
        const double f_true = sys.modal[bi].natural_frequency_hz;
        CHECK(banded[bi].modal[0].natural_frequency_hz == doctest::Approx(f_true).epsilon(1e-3));
    }
}

TEST_CASE("out-of-band poles are reported as discarded computational poles") {
    auto sys = SyntheticSystem::from_modal(
        ModalParameterSet::from_modes({{6.0, 0.02, 1.0}, {15.0, 0.01, 0.8}}));
    auto frf = frf_from_modal(sys, FrequencyGrid::uniform(0.5, 0.05, 991));
    RfpConfig config;
    config.extra_numerator_terms = 0;
    config.bands = std::vector<Band>{{4.0, 8.0, 2}};  // over-ordered band
    auto results = fit_banded(frf, config);
    REQUIRE(results.size() == 1);
    for (const auto& m : results[0].modal.modes()) {
        CHECK(m.natural_frequency_hz >= 4.0);
        CHECK(m.natural_frequency_hz <= 8.0);
    }
}

TEST_CASE("reconstruction with unit polynomials is a constant unit frf") {
    RfpResult identity;
    identity.numerator_scaled = {1.0};
    identity.denominator_scaled = {1.0};
    identity.numerator_coeffs = {1.0};
    identity.denominator_coeffs = {1.0};
    identity.freq_scale = 1.0;
    auto rec = reconstruct_frf(identity, FrequencyGrid::uniform(1.0, 1.0, 10));
    for (const auto& v : rec.values) CHECK(std::abs(v - Complex(1.0, 0.0)) < 1e-15);
}

TEST_CASE("reconstruction error matches the stored residual") {
    auto frf = single_mode_frf();
    RfpConfig config;
    config.n_modes = 1;
    config.extra_numerator_terms = 2;
    auto result = fit_global(frf, config);

    auto rec = reconstruct_frf(result, frf.grid);
    double j_val = 0.0;
    for (std::size_t i = 0; i < frf.size(); ++i) {
        const Complex s(0.0, kTwoPi * frf.grid[i] / result.freq_scale);
        Complex den(0.0, 0.0);
        for (auto it = result.denominator_scaled.rbegin(); it != result.denominator_scaled.rend();
             ++it)
            den = den * s + *it;
        j_val += std::norm(den * (rec.values[i] - frf.values[i]));
    }
    CHECK(std::abs(j_val - result.fit_residual) <= 1e-10 * (1.0 + result.fit_residual));
}

TEST_CASE("reconstruction of an exact fit overlays the oracle in band") {
    auto sys = SyntheticSystem::from_modal(
        ModalParameterSet::from_modes({{12.0, 0.02, 1.0}}));
    auto frf = frf_from_modal(sys, FrequencyGrid::uniform(8.0, 0.02, 401));  // 8 to 16 Hz
    RfpConfig config;
    config.n_modes = 1;
    config.extra_numerator_terms = 2;
    auto result = fit_global(frf, config);
    auto rec = reconstruct_frf(result, frf.grid);
    for (std::size_t i = 0; i < frf.size(); ++i)
        CHECK(std::abs(rec.values[i] - frf.values[i]) <= 0.005 * std::abs(frf.values[i]));
}

TEST_CASE("banded reconstruction refuses to extrapolate") {
    auto frf = single_mode_frf();
    RfpConfig config;
    config.bands = std::vector<Band>{{8.0, 12.0, 1}};
    auto results = fit_banded(frf, config);
    CHECK_THROWS_AS(reconstruct_frf(results[0], FrequencyGrid::uniform(6.0, 1.0, 4)), DataError);
}

TEST_CASE("normal equations matrix is symmetric positive semi-definite") {
    auto sys = SyntheticSystem::from_modal(
        ModalParameterSet::from_modes({{6.0, 0.02, 1.0}, {15.0, 0.01, 0.8}}), 1, 0.02, 3);
    auto frf = frf_from_modal(sys, FrequencyGrid::uniform(1.0, 0.1, 300));
    RfpConfig config;
    config.n_modes = 2;
    config.extra_numerator_terms = 4;
    const Eigen::MatrixXd M = normal_equations_matrix(frf, config);

    const double scale = M.cwiseAbs().maxCoeff();
    CHECK(((M - M.transpose()).cwiseAbs().maxCoeff()) <= 1e-10 * scale);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double max_ev = es.eigenvalues().maxCoeff();
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * max_ev);
}

TEST_CASE("the solved coefficients are a local optimum of the objective") {
    auto frf = single_mode_frf();
    RfpConfig config;
    config.n_modes = 1;
    config.extra_numerator_terms = 2;
    auto result = fit_global(frf, config);
    const double j_star = fit_objective(result, frf);

    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 50; ++trial) {
        auto perturbed = result;
        std::vector<double*> coeffs;
        for (auto& c : perturbed.numerator_scaled) coeffs.push_back(&c);
        for (std::size_t k = 0; k + 1 < perturbed.denominator_scaled.size(); ++k)
            coeffs.push_back(&perturbed.denominator_scaled[k]);  // keep the monic lead
        std::vector<double> direction(coeffs.size());
        double norm = 0.0;
        for (auto& d : direction) {
            d = gauss(rng);
            norm += d * d;
        }
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < coeffs.size(); ++k) *coeffs[k] += 1e-3 * direction[k] / norm;
        CHECK(fit_objective(perturbed, frf) >= j_star);
    }
}

TEST_CASE("every retained pole has a conjugate partner among the raw roots") {
    auto sys = SyntheticSystem::from_modal(ModalParameterSet::from_modes(
        {{6.0, 0.02, 1.0}, {15.0, 0.01, 0.8}, {38.0, 0.015, 1.2}}));
    auto frf = frf_from_modal(sys, FrequencyGrid::uniform(0.5, 0.05, 991));
    RfpConfig config;
    config.n_modes = 3;
    config.extra_numerator_terms = 0;
    auto result = fit_global(frf, config);
    REQUIRE(result.modal.size() == 3);
    for (const auto& p : result.raw_poles) {
        if (p.imag() <= 0.0) continue;
        double best = 1e300;
        for (const auto& q : result.raw_poles) best = std::min(best, std::abs(std::conj(p) - q));
        CHECK(best <= 1e-8 * std::abs(p));
    }
}

TEST_CASE("band table parsing") {
    const char* path = "band_table_test.txt";
    {
        std::ofstream out(path);
        out << "# lower upper modes\n";
        out << "5 9 1\n";
        out << "22, 24, 2\n";
        out << "\n";
    }
    auto bands = load_band_table(path);
    REQUIRE(bands.size() == 2);
    CHECK(bands[0].lower_hz == doctest::Approx(5.0));
    CHECK(bands[1].modes_in_band == 2);
    CHECK_THROWS_AS(load_band_table("no_such_file.txt"), UsageError);
    std::remove(path);
}
