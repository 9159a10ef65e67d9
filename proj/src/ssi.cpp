#include "modalkit/ssi.hpp"

#include <cmath>
#include <fstream>

#include "modalkit/spectral.hpp"

namespace modalkit::ssi {

void SsiConfig::validate() const {
    if (n_lags < 1) throw UsageError("n_lags must be >= 1");
    if (max_order < 2 || max_order % 2 != 0) throw UsageError("max_order must be even and >= 2");
    if (order_step < 2 || order_step % 2 != 0) throw UsageError("order_step must be even and >= 2");
    if (decimation < 1) throw UsageError("decimation must be >= 1");
    if (!(consistency_freq_rel > 0.0 && consistency_damp_rel > 0.0))
        throw UsageError("consistency tolerances must be > 0");
}

CovarianceBlocks build_covariances(const std::vector<TimeSeriesRecord>& records,
                                   const SsiConfig& config) {
    config.validate();
    if (records.empty()) throw DataError("no channels supplied");
    const double fs = records.front().sample_rate;
    const std::size_t len = records.front().samples.size();
    for (const auto& r : records) {
        if (r.sample_rate != fs) throw DataError("channel sample rates differ");
        if (r.samples.size() != len) throw DataError("channel lengths differ");
    }
    const int c = static_cast<int>(records.size());
    if (config.max_order > config.n_lags * c)
        throw UsageError("max_order exceeds n_lags * channel_count");

    CovarianceBlocks blocks;
    blocks.n_channels = c;
    blocks.n_lags = config.n_lags;
    blocks.sample_rate_effective = fs / static_cast<double>(config.decimation);
    // The anti-alias filter self-correlates the data over its main lobe;
    // separating past and future by that span keeps the cross covariance
    // dominated by plant dynamics rather than filter dynamics.
    blocks.lag_gap = spectral::decimation_correlation_gap(config.decimation);

    std::vector<std::vector<double>> dec(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        dec[i] = spectral::decimate(records[i].samples, config.decimation);
    const std::size_t n = dec.front().size();
    if (n <= static_cast<std::size_t>(4 * config.n_lags + blocks.lag_gap))
        throw DataError("record too short after decimation for the requested lag count");

    blocks.decimated.resize(c, static_cast<Eigen::Index>(n));
    for (int ch = 0; ch < c; ++ch) {
        double mean = 0.0;
        for (double v : dec[static_cast<std::size_t>(ch)]) mean += v;
        mean /= static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t)
            blocks.decimated(ch, static_cast<Eigen::Index>(t)) =
                dec[static_cast<std::size_t>(ch)][t] - mean;
    }

    const int lags = config.n_lags;
    const auto n_cols = static_cast<Eigen::Index>(n) - (2 * lags + blocks.lag_gap) + 1;
    Eigen::MatrixXd past(lags * c, n_cols);
    Eigen::MatrixXd future(lags * c, n_cols);
    for (int j = 0; j < lags; ++j) {
        past.middleRows(j * c, c) = blocks.decimated.middleCols(j, n_cols);
        future.middleRows(j * c, c) =
            blocks.decimated.middleCols(lags + blocks.lag_gap + j, n_cols);
    }
    const double scale = 1.0 / static_cast<double>(n_cols);
    blocks.pp = scale * past * past.transpose();
    blocks.pf = scale * past * future.transpose();
    blocks.fp = blocks.pf.transpose();
    blocks.ff = scale * future * future.transpose();
    return blocks;
}

namespace {

struct SymmetricRoots {
    Eigen::MatrixXd sqrt;
    Eigen::MatrixXd inv_sqrt;
    bool regularized = false;
};

// Square root and regularized inverse square root through the symmetric
// eigendecomposition, flooring eigenvalues at 1e-10 of the largest.
SymmetricRoots symmetric_roots(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double max_ev = ev.maxCoeff();
    if (!(max_ev > 0.0)) throw DataError("covariance block is zero or negative definite");
    const double floor = 1e-10 * max_ev;

    SymmetricRoots out;
    Eigen::VectorXd sq(ev.size()), isq(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        double v = ev(i);
        if (v < floor) {
            v = floor;
            out.regularized = true;
        }
        sq(i) = std::sqrt(v);
        isq(i) = 1.0 / sq(i);
    }
    out.sqrt = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
    out.inv_sqrt = es.eigenvectors() * isq.asDiagonal() * es.eigenvectors().transpose();
    return out;
}

}  // namespace

OrderResult identify_at_order(const CovarianceBlocks& blocks, int order,
                              double sample_rate_effective) {
    if (order < 0) throw UsageError("order must be >= 0");
    const int c = blocks.n_channels;
    const Eigen::Index dim = blocks.fp.rows();

    OrderResult result;
    if (order == 0) {
        result.state_space.A.resize(0, 0);
        result.state_space.C.resize(c, 0);
        result.singular_values.resize(0);
        return result;
    }
    if (order > dim || order > blocks.fp.cols())
        throw DataError("order exceeds the rank available from the covariance SVD");

    const auto wf = symmetric_roots(blocks.ff);
    const auto wp = symmetric_roots(blocks.pp);
    result.regularized = wf.regularized || wp.regularized;

    // Canonical correlation structure between future and past.
    const Eigen::MatrixXd normalized = wf.inv_sqrt * blocks.fp * wp.inv_sqrt;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(normalized, Eigen::ComputeThinU | Eigen::ComputeThinV);
    result.singular_values = svd.singularValues();

    const Eigen::MatrixXd u_hat = svd.matrixU().leftCols(order);
    const Eigen::MatrixXd v_hat = svd.matrixV().leftCols(order);
    const Eigen::VectorXd s_sqrt =
        svd.singularValues().head(order).array().max(0.0).sqrt();

    result.observability = wf.sqrt * u_hat * s_sqrt.asDiagonal();
    result.controllability = s_sqrt.asDiagonal() * v_hat.transpose() * wp.sqrt;

    result.state_space.C = result.observability.topRows(c);
    const Eigen::Index shift_rows = result.observability.rows() - c;
    const Eigen::MatrixXd o_up = result.observability.topRows(shift_rows);
    const Eigen::MatrixXd o_down = result.observability.bottomRows(shift_rows);
    result.state_space.A = o_up.completeOrthogonalDecomposition().solve(o_down);

    const double dt = 1.0 / sample_rate_effective;
    Eigen::EigenSolver<Eigen::MatrixXd> es(result.state_space.A, false);
    std::vector<Complex> poles;
    poles.reserve(static_cast<std::size_t>(order));
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex lambda = es.eigenvalues()(i);
        if (std::abs(lambda) <= 0.0) {
            result.discarded.push_back({Pole{lambda}, PoleDiscardReason::degenerate});
            continue;
        }
        poles.push_back(std::log(lambda) / dt);
    }
    auto classified = classify_poles(poles);
    result.modal = std::move(classified.modal);
    for (auto& d : classified.discarded) result.discarded.push_back(d);
    return result;
}

ConsistencyDiagram consistency_scan(const CovarianceBlocks& blocks, const SsiConfig& config) {
    config.validate();
    ConsistencyDiagram diagram;

    std::vector<Mode> previous;
    for (int order = 2; order <= config.max_order; order += config.order_step) {
        const auto result = identify_at_order(blocks, order, blocks.sample_rate_effective);
        for (const auto& mode : result.modal.modes()) {
            bool consistent = false;
            for (const auto& prev : previous) {
                const double df = std::abs(mode.natural_frequency_hz - prev.natural_frequency_hz) /
                                  prev.natural_frequency_hz;
                const double dz = std::abs(mode.damping_ratio - prev.damping_ratio) /
                                  std::max(prev.damping_ratio, 1e-12);
                if (df <= config.consistency_freq_rel && dz <= config.consistency_damp_rel) {
                    consistent = true;
                    break;
                }
            }
            diagram.entries.push_back(
                {order, mode.natural_frequency_hz, mode.damping_ratio, consistent});
        }
        previous = result.modal.modes();
    }

    // Singular-valued spectrum of the processed output data.
    const auto n = blocks.decimated.cols();
    spectral::WelchConfig wcfg;
    wcfg.segment_length = std::max<std::size_t>(static_cast<std::size_t>(n) / 8, 32);
    auto [grid, csd] = spectral::welch_csd_matrix(blocks.decimated,
                                                  blocks.sample_rate_effective, wcfg);
    const int k = std::min(5, blocks.n_channels);
    diagram.svs.grid = grid;
    diagram.svs.values.resize(static_cast<Eigen::Index>(csd.size()), k);
    for (std::size_t i = 0; i < csd.size(); ++i) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(csd[i]);
        for (int j = 0; j < k; ++j)
            diagram.svs.values(static_cast<Eigen::Index>(i), j) = svd.singularValues()(j);
    }
    return diagram;
}

void write_consistency_csv(const ConsistencyDiagram& diagram, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "order,freq_hz,zeta,consistent\n";
    for (const auto& e : diagram.entries)
        out << e.order << ',' << e.natural_frequency_hz << ',' << e.damping_ratio << ','
            << (e.consistent ? 1 : 0) << '\n';
}

void write_svs_csv(const ConsistencyDiagram& diagram, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "freq_hz";
    for (Eigen::Index j = 0; j < diagram.svs.values.cols(); ++j) out << ",sv" << (j + 1);
    out << '\n';
    for (std::size_t i = 0; i < diagram.svs.grid.size(); ++i) {
        out << diagram.svs.grid[i];
        for (Eigen::Index j = 0; j < diagram.svs.values.cols(); ++j)
            out << ',' << diagram.svs.values(static_cast<Eigen::Index>(i), j);
        out << '\n';
    }
}

}  // namespace modalkit::ssi
