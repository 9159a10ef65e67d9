#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modalkit/types.hpp"

namespace modalkit::ssi {

struct SsiConfig {
    int n_lags = 25;       // block rows per Hankel half
    int max_order = 20;    // highest evaluated model order, even
    int order_step = 2;    // even, second-order mode structure
    int decimation = 5;
    double consistency_freq_rel = 0.01;
    double consistency_damp_rel = 0.05;

    void validate() const;
};

/// Past/future covariance partition of the lagged output Hankel matrices,
/// plus the processed channel data the partition was built from. The
/// future block starts lag_gap lags after the past block ends, clearing
/// the moving-average span of the decimation filter so the cross
/// covariance carries only the plant's pole structure.
struct CovarianceBlocks {
    Eigen::MatrixXd pp, pf, fp, ff;
    Eigen::MatrixXd decimated;  // channels x samples, mean removed
    int n_channels = 0;
    int n_lags = 0;
    int lag_gap = 0;
    double sample_rate_effective = 0.0;
};

struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::MatrixXd C;
};

/// Identification output at a single model order.
struct OrderResult {
    ModalParameterSet modal;
    StateSpace state_space;
    Eigen::VectorXd singular_values;   // full CCA spectrum, non-increasing
    Eigen::MatrixXd observability;     // O, (n_lags * channels) x order
    Eigen::MatrixXd controllability;   // C_hat, order x (n_lags * channels)
    std::vector<DiscardedPole> discarded;
    bool regularized = false;  // eigenvalue floor engaged in a weighting block
};

struct ConsistencyEntry {
    int order = 0;
    double natural_frequency_hz = 0.0;
    double damping_ratio = 0.0;
    bool consistent = false;
};

/// Per-frequency singular values of the output cross-spectral matrix.
struct SingularValueSpectrum {
    FrequencyGrid grid;
    Eigen::MatrixXd values;  // lines x components
};

struct ConsistencyDiagram {
    std::vector<ConsistencyEntry> entries;  // ascending order groups
    SingularValueSpectrum svs;
};

/// Decimate (anti-aliased), remove channel means, stack lagged block Hankel
/// matrices and form the past/future covariance partition.
CovarianceBlocks build_covariances(const std::vector<TimeSeriesRecord>& records,
                                   const SsiConfig& config);

/// Truncate the canonical-correlation SVD at `order`, recover (A, C) from
/// the observability factor and map discrete eigenvalues to modes through
/// ln(lambda) / dt.
OrderResult identify_at_order(const CovarianceBlocks& blocks, int order,
                              double sample_rate_effective);

/// Identify across orders {2, 4, ..., max_order} and mark modes that match
/// an entry at the previous order within the configured tolerances.
ConsistencyDiagram consistency_scan(const CovarianceBlocks& blocks, const SsiConfig& config);

/// CSV exports for external plotting.
void write_consistency_csv(const ConsistencyDiagram& diagram, const std::string& path);
void write_svs_csv(const ConsistencyDiagram& diagram, const std::string& path);

}  // namespace modalkit::ssi
