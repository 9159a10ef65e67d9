#include "modalkit/shm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace modalkit::shm {

void FeatureMatrix::validate() const {
    if (!data.allFinite()) throw DataError("feature matrix contains non-finite values");
    if (labels && static_cast<Eigen::Index>(labels->size()) != data.rows())
        throw DataError("labels must cover every row");
    if (!meta.empty() && static_cast<Eigen::Index>(meta.size()) != data.rows())
        throw DataError("row metadata must cover every row");
}

std::vector<double> extract_frequency_features(const std::vector<ModalParameterSet>& per_sensor,
                                               const std::set<std::size_t>& exclude) {
    if (per_sensor.empty()) throw DataError("no sensor modal sets supplied");
    const std::size_t n_modes = per_sensor.front().size();
    for (const auto& set : per_sensor)
        if (set.size() != n_modes)
            throw DataError("sensor modal sets report different mode counts");

    std::vector<double> feature;
    feature.reserve(n_modes);
    for (std::size_t r = 0; r < n_modes; ++r) {
        if (exclude.count(r)) continue;
        double mean = 0.0;
        for (const auto& set : per_sensor) mean += set[r].natural_frequency_hz;
        feature.push_back(mean / static_cast<double>(per_sensor.size()));
    }
    return feature;
}

std::pair<FeatureMatrix, PcaBasis> pca_fit_transform(const FeatureMatrix& features,
                                                     int n_components) {
    features.validate();
    const auto n = features.rows();
    const auto d = features.cols();
    if (n < 2) throw DataError("PCA needs at least two observations");
    if (n_components < 1 || n_components > d)
        throw UsageError("n_components must lie in [1, feature dimension]");

    PcaBasis basis;
    basis.mean = features.data.colwise().mean();
    Eigen::MatrixXd centered = features.data.rowwise() - basis.mean.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    basis.components = svd.matrixV().leftCols(n_components);
    basis.variances.resize(n_components);
    for (int i = 0; i < n_components; ++i) {
        const double s = svd.singularValues()(i);
        basis.variances(i) = s * s / static_cast<double>(n - 1);
    }

    FeatureMatrix transformed;
    transformed.data = centered * basis.components;
    transformed.labels = features.labels;
    transformed.meta = features.meta;
    return {std::move(transformed), std::move(basis)};
}

Eigen::MatrixXd pca_transform(const PcaBasis& basis, const Eigen::MatrixXd& data) {
    if (data.cols() != basis.mean.size())
        throw DataError("feature dimension does not match PCA basis");
    return (data.rowwise() - basis.mean.transpose()) * basis.components;
}

namespace {

// Ridge floor 1e-8 * trace / d, with an absolute fallback for an all-zero
// covariance. Applied only when the plain factorization fails.
bool regularize_if_needed(Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
        // Guard against semi-definite matrices that squeak through LLT.
        const double min_diag = llt.matrixLLT().diagonal().minCoeff();
        if (min_diag > 0.0) return false;
    }
    double ridge = 1e-8 * cov.trace() / static_cast<double>(cov.rows());
    if (!(ridge > 0.0)) ridge = 1e-12;
    cov += ridge * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    return true;
}

struct GaussianEvaluator {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;

    explicit GaussianEvaluator(const Eigen::MatrixXd& cov) : llt(cov) {
        if (llt.info() != Eigen::Success)
            throw ConditioningError("covariance not positive definite after regularization", 0.0);
        log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }

    double squared_distance(const Eigen::VectorXd& diff) const {
        return diff.dot(llt.solve(diff));
    }

    double log_density(const Eigen::VectorXd& diff) const {
        const auto d = static_cast<double>(diff.size());
        return -0.5 * (d * std::log(kTwoPi) + log_det + squared_distance(diff));
    }
};

}  // namespace

GmmModel gmm_fit(const FeatureMatrix& train) {
    train.validate();
    if (!train.labels) throw DataError("GMM training data must carry labels");
    const auto n = train.rows();
    if (n == 0) throw DataError("empty training set");

    std::map<int, std::vector<Eigen::Index>> by_class;
    for (Eigen::Index i = 0; i < n; ++i) by_class[(*train.labels)[static_cast<std::size_t>(i)]].push_back(i);

    GmmModel model;
    for (const auto& [label, rows] : by_class) {
        if (rows.size() < 2)
            throw DataError("class " + std::to_string(label) + " has fewer than two samples");
        GaussianClass cls;
        cls.label = label;
        cls.prior = static_cast<double>(rows.size()) / static_cast<double>(n);
        cls.mean = Eigen::VectorXd::Zero(train.cols());
        for (auto r : rows) cls.mean += train.data.row(r).transpose();
        cls.mean /= static_cast<double>(rows.size());

        cls.covariance = Eigen::MatrixXd::Zero(train.cols(), train.cols());
        for (auto r : rows) {
            const Eigen::VectorXd diff = train.data.row(r).transpose() - cls.mean;
            cls.covariance += diff * diff.transpose();
        }
        cls.covariance /= static_cast<double>(rows.size());  // maximum likelihood
        model.regularized |= regularize_if_needed(cls.covariance);
        model.classes.push_back(std::move(cls));
    }
    return model;
}

Classification gmm_classify(const GmmModel& model, const Eigen::VectorXd& x) {
    if (model.classes.empty()) throw DataError("empty model");
    const auto k = model.classes.size();
    Eigen::VectorXd log_post(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& cls = model.classes[i];
        if (x.size() != cls.mean.size())
            throw DataError("feature dimension does not match model");
        GaussianEvaluator eval(cls.covariance);
        log_post(static_cast<Eigen::Index>(i)) = std::log(cls.prior) + eval.log_density(x - cls.mean);
    }
    const double max_lp = log_post.maxCoeff();
    Eigen::VectorXd post = (log_post.array() - max_lp).exp();
    post /= post.sum();

    Classification out;
    Eigen::Index best = 0;
    post.maxCoeff(&best);
    out.label = model.classes[static_cast<std::size_t>(best)].label;
    out.posteriors = std::move(post);
    return out;
}

std::vector<double> extract_spectral_features(const Frf& frf, double lo_hz, double hi_hz,
                                              int n_lines) {
    if (n_lines < 1) throw UsageError("n_lines must be >= 1");
    if (lo_hz < frf.grid.front() || hi_hz > frf.grid.back())
        throw DataError("feature band outside FRF grid range");
    const auto idx = frf.grid.band_indices(lo_hz, hi_hz);
    if (static_cast<int>(idx.size()) < n_lines)
        throw DataError("band holds fewer lines than requested features");

    std::vector<double> feature(static_cast<std::size_t>(n_lines));
    std::size_t prev = 0;
    for (int j = 0; j < n_lines; ++j) {
        const double t = n_lines == 1
                             ? 0.5 * (lo_hz + hi_hz)
                             : lo_hz + (hi_hz - lo_hz) * static_cast<double>(j) /
                                   static_cast<double>(n_lines - 1);
        std::size_t best = idx.front();
        double best_d = std::abs(frf.grid[best] - t);
        for (auto i : idx) {
            const double dist = std::abs(frf.grid[i] - t);
            if (dist < best_d) {
                best = i;
                best_d = dist;
            }
        }
        if (j > 0 && best <= prev) best = prev + 1;  // keep lines distinct
        prev = best;
        feature[static_cast<std::size_t>(j)] = std::abs(frf.values[best]);
    }
    return feature;
}

NoveltyDetector novelty_fit(const FeatureMatrix& normal, double confidence,
                            std::size_t mc_samples, std::uint64_t seed) {
    normal.validate();
    if (!(confidence > 0.0 && confidence < 1.0))
        throw UsageError("confidence must lie in (0, 1)");
    if (mc_samples < 100) throw UsageError("mc_samples too small for a stable quantile");
    const auto n = normal.rows();
    if (n < 2) throw DataError("need at least two normal observations");

    NoveltyDetector det;
    det.confidence = confidence;
    det.mean = normal.data.colwise().mean();
    Eigen::MatrixXd centered = normal.data.rowwise() - det.mean.transpose();
    det.covariance = centered.transpose() * centered / static_cast<double>(n);
    det.regularized = regularize_if_needed(det.covariance);

    GaussianEvaluator eval(det.covariance);
    const Eigen::MatrixXd factor = eval.llt.matrixL();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> distances(mc_samples);
    Eigen::VectorXd z(det.mean.size());
    for (std::size_t s = 0; s < mc_samples; ++s) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
        distances[s] = eval.squared_distance(factor * z);
    }
    std::sort(distances.begin(), distances.end());
    const auto rank = static_cast<std::size_t>(
        std::ceil(confidence * static_cast<double>(mc_samples))) - 1;
    det.threshold = distances[std::min(rank, mc_samples - 1)];
    return det;
}

NoveltyScore novelty_score(const NoveltyDetector& detector, const Eigen::VectorXd& x) {
    if (x.size() != detector.mean.size())
        throw DataError("feature dimension does not match detector");
    GaussianEvaluator eval(detector.covariance);
    NoveltyScore score;
    score.distance = eval.squared_distance(x - detector.mean);
    score.outlier = score.distance > detector.threshold;
    return score;
}

std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& features,
                                                         double train_fraction,
                                                         std::uint64_t seed) {
    features.validate();
    if (!features.labels) throw DataError("stratified split needs labels");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw UsageError("train_fraction must lie in (0, 1)");

    std::map<int, std::vector<Eigen::Index>> by_class;
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        by_class[(*features.labels)[static_cast<std::size_t>(i)]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> train_rows, test_rows;
    for (auto& [label, rows] : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto k = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(rows.size())));
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < k ? train_rows : test_rows).push_back(rows[i]);
    }

    auto take = [&](const std::vector<Eigen::Index>& rows) {
        FeatureMatrix out;
        out.data.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
        out.labels = std::vector<int>(rows.size());
        if (!features.meta.empty()) out.meta.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.data.row(static_cast<Eigen::Index>(i)) = features.data.row(rows[i]);
            (*out.labels)[i] = (*features.labels)[static_cast<std::size_t>(rows[i])];
            if (!features.meta.empty())
                out.meta[i] = features.meta[static_cast<std::size_t>(rows[i])];
        }
        return out;
    };
    return {take(train_rows), take(test_rows)};
}

namespace {

void write_vector(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
    out << name;
    out.precision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v(i);
    out << '\n';
}

void write_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
    out.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out << name;
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << m(r, c);
        out << '\n';
    }
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& expect, Eigen::Index size) {
    std::string tag;
    in >> tag;
    if (tag != expect) throw IntegrityError("model file: expected '" + expect + "'");
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i)
        if (!(in >> v(i))) throw IntegrityError("model file: truncated vector " + expect);
    return v;
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expect, Eigen::Index dim) {
    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
        m.row(r) = read_vector(in, expect, dim).transpose();
    return m;
}

}  // namespace

void save_gmm(const GmmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    const auto dim = model.classes.empty() ? 0 : model.classes.front().mean.size();
    out << "modalkit_gmm 1\n";
    out << "classes " << model.classes.size() << " dim " << dim << " regularized "
        << (model.regularized ? 1 : 0) << '\n';
    for (const auto& cls : model.classes) {
        out.precision(17);
        out << "class " << cls.label << " prior " << cls.prior << '\n';
        write_vector(out, "mean", cls.mean);
        write_matrix(out, "cov", cls.covariance);
    }
}

GmmModel load_gmm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "modalkit_gmm" || version != 1)
        throw IntegrityError("not a modalkit GMM model: " + path);
    std::string tag;
    std::size_t k = 0;
    Eigen::Index dim = 0;
    int reg = 0;
    in >> tag >> k >> tag >> dim >> tag >> reg;

    GmmModel model;
    model.regularized = reg != 0;
    for (std::size_t i = 0; i < k; ++i) {
        GaussianClass cls;
        in >> tag >> cls.label >> tag >> cls.prior;
        cls.mean = read_vector(in, "mean", dim);
        cls.covariance = read_matrix(in, "cov", dim);
        model.classes.push_back(std::move(cls));
    }
    if (!in) throw IntegrityError("truncated GMM model: " + path);
    return model;
}

void save_novelty(const NoveltyDetector& detector, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out.precision(17);
    out << "modalkit_novelty 1\n";
    out << "dim " << detector.mean.size() << " confidence " << detector.confidence
        << " threshold " << detector.threshold << " regularized "
        << (detector.regularized ? 1 : 0) << '\n';
    write_vector(out, "mean", detector.mean);
    write_matrix(out, "cov", detector.covariance);
}

NoveltyDetector load_novelty(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "modalkit_novelty" || version != 1)
        throw IntegrityError("not a modalkit novelty model: " + path);
    std::string tag;
    Eigen::Index dim = 0;
    int reg = 0;
    NoveltyDetector det;
    in >> tag >> dim >> tag >> det.confidence >> tag >> det.threshold >> tag >> reg;
    det.regularized = reg != 0;
    det.mean = read_vector(in, "mean", dim);
    det.covariance = read_matrix(in, "cov", dim);
    if (!in) throw IntegrityError("truncated novelty model: " + path);
    return det;
}

}  // namespace modalkit::shm
