#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modalkit/types.hpp"

namespace modalkit::shm {

struct RowMeta {
    double excitation_level = 0.0;
    std::string damage_location;
    double added_mass = 0.0;
};

/// Observations by row. Labels, when present, cover every row.
struct FeatureMatrix {
    Eigen::MatrixXd data;
    std::optional<std::vector<int>> labels;
    std::vector<RowMeta> meta;

    void validate() const;
    Eigen::Index rows() const { return data.rows(); }
    Eigen::Index cols() const { return data.cols(); }
};

struct GaussianClass {
    int label = 0;
    double prior = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct GmmModel {
    std::vector<GaussianClass> classes;
    bool regularized = false;  // ridge floor engaged for some class
};

struct PcaBasis {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // feature_dim x n_components, orthonormal columns
    Eigen::VectorXd variances;   // per component, non-increasing
};

struct NoveltyDetector {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double threshold = 0.0;
    double confidence = 0.99;
    bool regularized = false;
};

/// Element-wise mean of natural frequencies across sensors, with the given
/// 0-based mode indices dropped. All sets must report the same mode count
/// in matched order.
std::vector<double> extract_frequency_features(const std::vector<ModalParameterSet>& per_sensor,
                                               const std::set<std::size_t>& exclude = {});

/// Mean-centered projection onto the top-variance orthonormal directions.
std::pair<FeatureMatrix, PcaBasis> pca_fit_transform(const FeatureMatrix& features,
                                                     int n_components);

/// Apply a fitted basis to new observations.
Eigen::MatrixXd pca_transform(const PcaBasis& basis, const Eigen::MatrixXd& data);

/// Per-class sample mean and maximum-likelihood covariance with priors from
/// class counts. A class with fewer than two samples is an error; singular
/// covariances get a ridge floor and set the regularized flag.
GmmModel gmm_fit(const FeatureMatrix& train);

struct Classification {
    int label = 0;
    Eigen::VectorXd posteriors;  // aligned with model.classes, sums to 1
};

/// Posteriors proportional to prior times the class Gaussian density,
/// evaluated in log space.
Classification gmm_classify(const GmmModel& model, const Eigen::VectorXd& x);

/// Magnitudes of n_lines frequency lines spanning [lo_hz, hi_hz] as evenly
/// as the grid allows.
std::vector<double> extract_spectral_features(const Frf& frf, double lo_hz, double hi_hz,
                                              int n_lines);

/// Baseline Gaussian model of the normal condition with a Monte Carlo
/// threshold: the `confidence` quantile of the Mahalanobis distance over
/// mc_samples draws from the fitted distribution.
NoveltyDetector novelty_fit(const FeatureMatrix& normal, double confidence,
                            std::size_t mc_samples, std::uint64_t seed = 0);

struct NoveltyScore {
    double distance = 0.0;
    bool outlier = false;
};

NoveltyScore novelty_score(const NoveltyDetector& detector, const Eigen::VectorXd& x);

/// Stratified split with balanced class membership; returns (train, test).
std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& features,
                                                         double train_fraction,
                                                         std::uint64_t seed);

// Portable structured-text model round trip.
void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);
void save_novelty(const NoveltyDetector& detector, const std::string& path);
NoveltyDetector load_novelty(const std::string& path);

}  // namespace modalkit::shm
