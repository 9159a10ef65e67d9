#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>

#include "modalkit/oracle.hpp"
#include "modalkit/shm.hpp"

using namespace modalkit;
using namespace modalkit::shm;

namespace {

ModalParameterSet set_from(const std::vector<double>& freqs) {
    std::vector<Mode> modes;
    for (double f : freqs) modes.push_back({f, 0.01, 1.0});
    return ModalParameterSet::from_modes(modes);
}

FeatureMatrix gaussian_classes(const std::vector<Eigen::VectorXd>& means, int per_class,
                               std::uint64_t seed, double sigma = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    const auto d = means.front().size();
    FeatureMatrix out;
    out.data.resize(static_cast<Eigen::Index>(means.size()) * per_class, d);
    out.labels = std::vector<int>();
    for (std::size_t k = 0; k < means.size(); ++k) {
        for (int i = 0; i < per_class; ++i) {
            const auto row = static_cast<Eigen::Index>(k) * per_class + i;
            for (Eigen::Index j = 0; j < d; ++j) out.data(row, j) = means[k](j) + gauss(rng);
            out.labels->push_back(static_cast<int>(k));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("frequency features average across sensors") {
    auto f = extract_frequency_features({set_from({10.0, 20.0}), set_from({10.2, 19.8})});
    REQUIRE(f.size() == 2);
    CHECK(f[0] == doctest::Approx(10.1));
    CHECK(f[1] == doctest::Approx(19.9));

    // Single sensor passes through.
    auto single = extract_frequency_features({set_from({5.0, 7.0, 9.0})});
    CHECK(single == std::vector<double>{5.0, 7.0, 9.0});

    CHECK_THROWS_AS(extract_frequency_features({set_from({1.0}), set_from({1.0, 2.0})}),
                    DataError);
}

TEST_CASE("excluding one mode from nineteen leaves an 18-dim feature") {
    std::vector<double> freqs(19);
    for (std::size_t i = 0; i < freqs.size(); ++i) freqs[i] = 5.0 * (i + 1);
    auto f = extract_frequency_features({set_from(freqs)}, {10});
    CHECK(f.size() == 18);
    CHECK(std::find(f.begin(), f.end(), freqs[10]) == f.end());
}

TEST_CASE("pca on isotropic data spreads variance evenly") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss;
    FeatureMatrix fm;
    fm.data.resize(20000, 2);
    for (Eigen::Index i = 0; i < fm.data.rows(); ++i)
        for (Eigen::Index j = 0; j < 2; ++j) fm.data(i, j) = gauss(rng);
    auto [t, basis] = pca_fit_transform(fm, 2);
    CHECK(basis.variances(0) >= basis.variances(1));
    CHECK(basis.variances(0) / basis.variances(1) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pca captures rank-1 structure in the first component") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    FeatureMatrix fm;
    fm.data.resize(200, 3);
    for (Eigen::Index i = 0; i < fm.data.rows(); ++i) {
        const double t = gauss(rng);
        fm.data(i, 0) = t;
        fm.data(i, 1) = 2.0 * t;
        fm.data(i, 2) = -t;
    }
    auto [t, basis] = pca_fit_transform(fm, 3);
    const double total = basis.variances.sum();
    CHECK(basis.variances(0) / total >= 0.999);
}

TEST_CASE("pca with all components reconstructs exactly") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss;
    FeatureMatrix fm;
    fm.data.resize(50, 4);
    for (Eigen::Index i = 0; i < fm.data.rows(); ++i)
        for (Eigen::Index j = 0; j < 4; ++j) fm.data(i, j) = gauss(rng);
    auto [t, basis] = pca_fit_transform(fm, 4);
    Eigen::MatrixXd rec =
        (t.data * basis.components.transpose()).rowwise() + basis.mean.transpose();
    CHECK((rec - fm.data).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(pca_fit_transform(fm, 5), UsageError);
}

TEST_CASE("balanced training gives exactly equal priors") {
    auto fm = gaussian_classes({Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 10)}, 10, 5);
    auto model = gmm_fit(fm);
    REQUIRE(model.classes.size() == 2);
    CHECK(model.classes[0].prior == 0.5);
    CHECK(model.classes[1].prior == 0.5);
}

TEST_CASE("constant class covariance falls back to the ridge floor") {
    FeatureMatrix fm;
    fm.data.resize(6, 2);
    fm.data << 1, 2, 1, 2, 1, 2, 5, 1, 6, 2, 7, 3;
    fm.labels = std::vector<int>{0, 0, 0, 1, 1, 1};
    auto model = gmm_fit(fm);
    CHECK(model.regularized);
    const auto& cov = model.classes[0].covariance;
    CHECK(cov(0, 0) == cov(1, 1));
    CHECK(cov(0, 0) > 0.0);
    CHECK(cov(0, 1) == 0.0);
}

TEST_CASE("a class needs at least two samples") {
    FeatureMatrix fm;
    fm.data.resize(3, 1);
    fm.data << 1, 2, 3;
    fm.labels = std::vector<int>{0, 0, 1};
    CHECK_THROWS_AS(gmm_fit(fm), DataError);
}

TEST_CASE("well separated classes classify nearly perfectly") {
    int correct = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto train = gaussian_classes({Eigen::Vector2d(0, 0), Eigen::Vector2d(6, 6)}, 30, seed);
        auto test = gaussian_classes({Eigen::Vector2d(0, 0), Eigen::Vector2d(6, 6)}, 30,
                                     seed + 1000);
        auto model = gmm_fit(train);
        for (Eigen::Index i = 0; i < test.rows(); ++i) {
            auto c = gmm_classify(model, test.data.row(i).transpose());
            correct += (c.label == (*test.labels)[static_cast<std::size_t>(i)]) ? 1 : 0;
            ++total;
        }
    }
    CHECK(static_cast<double>(correct) / total >= 0.99);
}

TEST_CASE("posteriors behave at class centers and midpoints") {
    auto fm = gaussian_classes({Eigen::Vector2d(0, 0), Eigen::Vector2d(30, 0)}, 50, 6);
    auto model = gmm_fit(fm);

    auto at_center = gmm_classify(model, model.classes[0].mean);
    CHECK(at_center.label == model.classes[0].label);
    CHECK(at_center.posteriors(0) > 0.999);

    // Symmetric two-class model evaluated at the exact midpoint.
    GmmModel sym;
    for (int k = 0; k < 2; ++k) {
        GaussianClass cls;
        cls.label = k;
        cls.prior = 0.5;
        cls.mean = Eigen::Vector2d(k == 0 ? -1.0 : 1.0, 0.0);
        cls.covariance = Eigen::Matrix2d::Identity();
        sym.classes.push_back(cls);
    }
    auto mid = gmm_classify(sym, Eigen::Vector2d(0.0, 0.0));
    CHECK(mid.posteriors(0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(mid.posteriors(1) == doctest::Approx(0.5).epsilon(1e-9));

    // Posterior normalization holds everywhere.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 10.0);
    for (int i = 0; i < 100; ++i) {
        auto c = gmm_classify(model, Eigen::Vector2d(gauss(rng), gauss(rng)));
        CHECK(c.posteriors.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("posteriors are invariant to a common prior rescaling") {
    GmmModel a, b;
    for (int k = 0; k < 2; ++k) {
        GaussianClass cls;
        cls.label = k;
        cls.prior = k == 0 ? 0.3 : 0.7;
        cls.mean = Eigen::Vector2d(k * 2.0, 0.0);
        cls.covariance = Eigen::Matrix2d::Identity();
        a.classes.push_back(cls);
        cls.prior *= 3.0;  // unnormalized copy
        b.classes.push_back(cls);
    }
    auto ca = gmm_classify(a, Eigen::Vector2d(0.7, -0.2));
    auto cb = gmm_classify(b, Eigen::Vector2d(0.7, -0.2));
    CHECK(ca.label == cb.label);
    CHECK(ca.posteriors(0) == doctest::Approx(cb.posteriors(0)).epsilon(1e-12));
}

TEST_CASE("classification commutes with invertible affine feature maps") {
    Eigen::Matrix2d a;
    a << 2.0, 0.5, -0.3, 1.5;
    const Eigen::Vector2d shift(4.0, -7.0);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto fm = gaussian_classes({Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 1)}, 40, seed);
        FeatureMatrix mapped = fm;
        mapped.data = (fm.data * a.transpose()).rowwise() + shift.transpose();

        auto m1 = gmm_fit(fm);
        auto m2 = gmm_fit(mapped);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 2.0);
        for (int i = 0; i < 50; ++i) {
            const Eigen::Vector2d x(gauss(rng), gauss(rng) + 1.5);
            auto c1 = gmm_classify(m1, x);
            auto c2 = gmm_classify(m2, a * x + shift);
            CHECK(c1.label == c2.label);
        }
    }
}

TEST_CASE("spectral features pick lines spanning the band") {
    auto grid = FrequencyGrid::uniform(100.0, 0.25, 400);  // 100 to 199.75 Hz
    std::vector<Complex> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = Complex(grid[i], -1.0);
    Frf frf(grid, values);

    // A band covering exactly eight grid lines returns those magnitudes.
    auto f8 = extract_spectral_features(frf, 155.0, 156.75, 8);
    REQUIRE(f8.size() == 8);
    for (int j = 0; j < 8; ++j)
        CHECK(f8[static_cast<std::size_t>(j)] ==
              doctest::Approx(std::abs(Complex(155.0 + 0.25 * j, -1.0))));

    auto f1 = extract_spectral_features(frf, 150.0, 160.0, 1);
    CHECK(f1[0] == doctest::Approx(std::abs(Complex(155.0, -1.0))));

    // Linearity in the FRF magnitude.
    for (auto& v : values) v *= 2.0;
    Frf doubled(grid, values);
    auto fd = extract_spectral_features(doubled, 155.0, 156.75, 8);
    for (std::size_t j = 0; j < 8; ++j) CHECK(fd[j] == doctest::Approx(2.0 * f8[j]));

    CHECK_THROWS_AS(extract_spectral_features(frf, 90.0, 110.0, 4), DataError);
    CHECK_THROWS_AS(extract_spectral_features(frf, 155.0, 155.3, 8), DataError);
}

TEST_CASE("monte carlo threshold tracks the chi-square quantile") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss;
    const int d = 8;
    FeatureMatrix normal;
    normal.data.resize(2000, d);
    for (Eigen::Index i = 0; i < normal.data.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j) normal.data(i, j) = gauss(rng);

    auto det = novelty_fit(normal, 0.99, 100000, 1);
    boost::math::chi_squared chi(d);
    CHECK(det.threshold == doctest::Approx(boost::math::quantile(chi, 0.99)).epsilon(0.05));

    // One-dimensional median case.
    FeatureMatrix n1;
    n1.data.resize(5000, 1);
    for (Eigen::Index i = 0; i < n1.data.rows(); ++i) n1.data(i, 0) = gauss(rng);
    auto det1 = novelty_fit(n1, 0.5, 100000, 2);
    CHECK(det1.threshold == doctest::Approx(0.454936).epsilon(0.05));
}

TEST_CASE("novelty scoring at the mean and along eigenvectors") {
    NoveltyDetector det;
    det.mean = Eigen::Vector3d(1.0, 2.0, 3.0);
    det.covariance = Eigen::Vector3d(4.0, 1.0, 0.25).asDiagonal();
    det.threshold = 9.0;

    auto at_mean = novelty_score(det, det.mean);
    CHECK(at_mean.distance == 0.0);
    CHECK_FALSE(at_mean.outlier);

    // k sigma along an eigenvector scores k^2.
    auto off = novelty_score(det, det.mean + Eigen::Vector3d(2.0 * 2.0, 0, 0));
    CHECK(off.distance == doctest::Approx(4.0).epsilon(1e-12));
    auto far = novelty_score(det, det.mean + Eigen::Vector3d(0, 4.0, 0));
    CHECK(far.distance == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(far.outlier);

    // Identity covariance reduces to squared Euclidean distance.
    NoveltyDetector iso;
    iso.mean = Eigen::Vector2d::Zero();
    iso.covariance = Eigen::Matrix2d::Identity();
    iso.threshold = 1.0;
    CHECK(novelty_score(iso, Eigen::Vector2d(3.0, 4.0)).distance == doctest::Approx(25.0));
}

TEST_CASE("held-out inlier false positive rate matches the confidence") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    const int d = 4;
    FeatureMatrix normal;
    normal.data.resize(4000, d);
    for (Eigen::Index i = 0; i < normal.data.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j) normal.data(i, j) = gauss(rng);
    auto det = novelty_fit(normal, 0.99, 100000, 3);

    int flagged = 0;
    const int draws = 10000;
    Eigen::VectorXd x(d);
    for (int i = 0; i < draws; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) x(j) = gauss(rng);
        if (novelty_score(det, x).outlier) ++flagged;
    }
    const double rate = static_cast<double>(flagged) / draws;
    CHECK(rate >= 0.005);
    CHECK(rate <= 0.02);
}

TEST_CASE("mahalanobis distance is affine invariant") {
    Eigen::Matrix3d a;
    a << 1.0, 0.2, 0.0, -0.4, 2.0, 0.1, 0.3, 0.0, 0.7;
    const Eigen::Vector3d shift(5.0, -2.0, 1.0);

    std::mt19937_64 rng(10);
    std::normal_distribution<double> gauss;
    FeatureMatrix fm;
    fm.data.resize(500, 3);
    for (Eigen::Index i = 0; i < fm.data.rows(); ++i)
        for (Eigen::Index j = 0; j < 3; ++j) fm.data(i, j) = gauss(rng);
    FeatureMatrix mapped = fm;
    mapped.data = (fm.data * a.transpose()).rowwise() + shift.transpose();

    auto d1 = novelty_fit(fm, 0.99, 1000, 4);
    auto d2 = novelty_fit(mapped, 0.99, 1000, 4);
    for (int i = 0; i < 50; ++i) {
        const Eigen::Vector3d x(gauss(rng), gauss(rng), gauss(rng));
        CHECK(novelty_score(d2, a * x + shift).distance ==
              doctest::Approx(novelty_score(d1, x).distance).epsilon(1e-8));
    }
}

TEST_CASE("stratified split balances classes and partitions rows") {
    auto fm = gaussian_classes({Eigen::Vector2d(0, 0), Eigen::Vector2d(5, 5)}, 16, 11);
    auto [train, test] = stratified_split(fm, 0.5, 42);
    CHECK(train.rows() == 16);
    CHECK(test.rows() == 16);
    int train_zero = 0;
    for (int l : *train.labels)
        if (l == 0) ++train_zero;
    CHECK(train_zero == 8);
}

TEST_CASE("models round trip through their text serialization") {
    auto fm = gaussian_classes({Eigen::Vector2d(0, 0), Eigen::Vector2d(4, 2)}, 20, 12);
    auto model = gmm_fit(fm);
    save_gmm(model, "gmm_test_model.txt");
    auto loaded = load_gmm("gmm_test_model.txt");
    REQUIRE(loaded.classes.size() == model.classes.size());
    for (std::size_t k = 0; k < model.classes.size(); ++k) {
        CHECK(loaded.classes[k].label == model.classes[k].label);
        CHECK(loaded.classes[k].prior == model.classes[k].prior);
        CHECK((loaded.classes[k].mean - model.classes[k].mean).norm() == 0.0);
        CHECK((loaded.classes[k].covariance - model.classes[k].covariance).norm() == 0.0);
    }
    std::remove("gmm_test_model.txt");

    FeatureMatrix normal;
    normal.data = fm.data;
    auto det = novelty_fit(normal, 0.95, 1000, 5);
    save_novelty(det, "novelty_test_model.txt");
    auto det2 = load_novelty("novelty_test_model.txt");
    CHECK(det2.threshold == det.threshold);
    CHECK(det2.confidence == det.confidence);
    CHECK((det2.covariance - det.covariance).norm() == 0.0);
    std::remove("novelty_test_model.txt");

    CHECK_THROWS_AS(load_gmm("missing_model.txt"), NotFoundError);
}
