#include "medsel/learners.hpp"

#include "medsel/error.hpp"
#include "medsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace medsel {

std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::ConstantMean: return "constant-mean";
        case LearnerKind::Linear: return "linear";
        case LearnerKind::Polynomial: return "polynomial";
        case LearnerKind::KernelRidge: return "kernel-ridge";
        case LearnerKind::NearestNeighbors: return "knn";
    }
    return "unknown";
}

LearnerKind learner_kind_from_string(const std::string& s) {
    for (auto kind : {LearnerKind::ConstantMean, LearnerKind::Linear, LearnerKind::Polynomial,
                      LearnerKind::KernelRidge, LearnerKind::NearestNeighbors})
        if (to_string(kind) == s) return kind;
    throw Error("unknown learner kind '" + s + "'");
}

std::string LearnerSpec::name() const {
    auto fmt = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    switch (kind) {
        case LearnerKind::ConstantMean: return "mean";
        case LearnerKind::Linear: return "linear";
        case LearnerKind::Polynomial: return "poly" + std::to_string(degree) + (interactions ? "x" : "");
        case LearnerKind::KernelRidge:
            return bandwidth > 0 ? "krr_h" + fmt(bandwidth) : "krr_s" + fmt(bandwidth_scale);
        case LearnerKind::NearestNeighbors: return k_sqrt_n ? "knn_sqrtn" : "knn" + std::to_string(k);
    }
    return "unknown";
}

void LearnerSpec::validate() const {
    if (kind == LearnerKind::Polynomial && degree < 1) throw Error("polynomial degree must be >= 1");
    if (kind == LearnerKind::KernelRidge) {
        if (bandwidth < 0 || bandwidth_scale <= 0) throw Error("kernel bandwidth must be positive");
        if (ridge <= 0) throw Error("kernel ridge penalty must be positive");
        if (landmarks < 1) throw Error("kernel ridge needs at least one landmark");
    }
    if (kind == LearnerKind::NearestNeighbors && !k_sqrt_n && k < 1) throw Error("knn needs k >= 1");
}

LearnerSpec LearnerSpec::constant_mean() { return {}; }

LearnerSpec LearnerSpec::linear() {
    LearnerSpec s;
    s.kind = LearnerKind::Linear;
    s.degree = 1;
    return s;
}

LearnerSpec LearnerSpec::polynomial(int degree, bool interactions) {
    LearnerSpec s;
    s.kind = LearnerKind::Polynomial;
    s.degree = degree;
    s.interactions = interactions;
    return s;
}

LearnerSpec LearnerSpec::kernel_ridge(double bandwidth_scale, double ridge) {
    LearnerSpec s;
    s.kind = LearnerKind::KernelRidge;
    s.bandwidth_scale = bandwidth_scale;
    s.ridge = ridge;
    return s;
}

LearnerSpec LearnerSpec::nearest_neighbors(int k) {
    LearnerSpec s;
    s.kind = LearnerKind::NearestNeighbors;
    s.k = k;
    return s;
}

LearnerSpec LearnerSpec::nearest_neighbors_sqrt_n() {
    LearnerSpec s;
    s.kind = LearnerKind::NearestNeighbors;
    s.k_sqrt_n = true;
    return s;
}

std::vector<LearnerSpec> default_library() {
    return {LearnerSpec::constant_mean(),
            LearnerSpec::linear(),
            LearnerSpec::polynomial(2, true),
            LearnerSpec::kernel_ridge(0.5),
            LearnerSpec::kernel_ridge(1.0),
            LearnerSpec::kernel_ridge(2.0),
            LearnerSpec::nearest_neighbors(10),
            LearnerSpec::nearest_neighbors_sqrt_n()};
}

std::vector<int> make_folds(int n, int K, std::uint64_t seed) {
    if (K < 2 || K > n)
        throw Error("fold count K=" + std::to_string(K) + " must satisfy 2 <= K <= n=" + std::to_string(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos % K;
    return fold;
}

namespace {

struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    explicit Standardizer(const MatrixXd& x) {
        mean = x.colwise().mean();
        scale.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double sd = std::sqrt((x.col(j).array() - mean[j]).square().mean());
            scale[j] = sd > 0 ? sd : 1.0;
        }
    }
    MatrixXd apply(const MatrixXd& x) const {
        return (x.rowwise() - mean).array().rowwise() / scale.array();
    }
};

class ConstantPredictor final : public Predictor {
public:
    explicit ConstantPredictor(Eigen::RowVectorXd means) : means_(std::move(means)) {}
    MatrixXd predict(const MatrixXd& features) const override {
        return means_.replicate(features.rows(), 1);
    }

private:
    Eigen::RowVectorXd means_;
};

// Monomials of total degree <= degree (pure powers only without interactions),
// excluding the constant, as exponent vectors.
std::vector<std::vector<int>> monomials(int q, int degree, bool interactions) {
    std::vector<std::vector<int>> out;
    std::vector<int> e(static_cast<std::size_t>(q), 0);
    auto rec = [&](auto&& self, int var, int remaining) -> void {
        if (var == q) {
            int total = std::accumulate(e.begin(), e.end(), 0);
            int nonzero = static_cast<int>(std::count_if(e.begin(), e.end(), [](int v) { return v > 0; }));
            if (total > 0 && (interactions || nonzero == 1)) out.push_back(e);
            return;
        }
        for (int a = 0; a <= remaining; ++a) {
            e[static_cast<std::size_t>(var)] = a;
            self(self, var + 1, remaining - a);
        }
        e[static_cast<std::size_t>(var)] = 0;
    };
    rec(rec, 0, degree);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        int da = std::accumulate(a.begin(), a.end(), 0), db = std::accumulate(b.begin(), b.end(), 0);
        return da != db ? da < db : a > b;
    });
    return out;
}

class Basis {
public:
    Basis(const MatrixXd& train, int degree, bool interactions)
        : standardizer_(train), terms_(monomials(static_cast<int>(train.cols()), degree, interactions)) {}

    MatrixXd expand(const MatrixXd& features) const {
        const MatrixXd z = standardizer_.apply(features);
        MatrixXd b(z.rows(), static_cast<Eigen::Index>(terms_.size()) + 1);
        b.col(0).setOnes();
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            auto col = b.col(static_cast<Eigen::Index>(t) + 1);
            col.setOnes();
            for (Eigen::Index j = 0; j < z.cols(); ++j)
                for (int a = 0; a < terms_[t][static_cast<std::size_t>(j)]; ++a) col.array() *= z.col(j).array();
        }
        return b;
    }

private:
    Standardizer standardizer_;
    std::vector<std::vector<int>> terms_;
};

double sigmoid(double eta) {
    const double p = 1.0 / (1.0 + std::exp(-eta));
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

class BasisPredictor final : public Predictor {
public:
    BasisPredictor(Basis basis, MatrixXd coef, bool logistic)
        : basis_(std::move(basis)), coef_(std::move(coef)), logistic_(logistic) {}

    MatrixXd predict(const MatrixXd& features) const override {
        MatrixXd out = basis_.expand(features) * coef_;
        if (logistic_) out = out.unaryExpr(&sigmoid);
        return out;
    }

private:
    Basis basis_;
    MatrixXd coef_;
    bool logistic_;
};

MatrixXd least_squares(const MatrixXd& b, const MatrixXd& t, std::vector<std::string>& warnings) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(b);
    if (b.rows() >= b.cols() && qr.rank() == b.cols()) return qr.solve(t);
    warnings.push_back("singular design in least-squares fit; using ridge penalty 1e-6");
    const MatrixXd gram = b.transpose() * b + 1e-6 * MatrixXd::Identity(b.cols(), b.cols());
    return gram.ldlt().solve(b.transpose() * t);
}

VectorXd logistic_irls(const MatrixXd& b, const VectorXd& y, std::vector<std::string>& warnings) {
    VectorXd beta = VectorXd::Zero(b.cols());
    const MatrixXd jitter = 1e-8 * MatrixXd::Identity(b.cols(), b.cols());
    for (int iter = 0; iter < 100; ++iter) {
        const VectorXd eta = b * beta;
        const VectorXd prob = eta.unaryExpr(&sigmoid);
        const VectorXd w = (prob.array() * (1.0 - prob.array())).max(1e-10);
        const VectorXd z = eta.array() + (y - prob).array() / w.array();
        const MatrixXd h = b.transpose() * w.asDiagonal() * b + jitter;
        const VectorXd next = h.ldlt().solve(b.transpose() * (w.asDiagonal() * z));
        if (!next.allFinite()) {
            warnings.push_back("logistic fit diverged; keeping last finite coefficients");
            return beta;
        }
        const double step = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        if (step < 1e-8) return beta;
    }
    warnings.push_back("logistic fit did not converge in 100 iterations");
    return beta;
}

FittedLearner fit_basis(const MatrixXd& x, const MatrixXd& t, int degree, bool interactions, bool binary) {
    FittedLearner out;
    Basis basis(x, degree, interactions);
    const MatrixXd b = basis.expand(x);
    MatrixXd coef(b.cols(), t.cols());
    if (binary) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) coef.col(c) = logistic_irls(b, t.col(c), out.warnings);
    } else {
        coef = least_squares(b, t, out.warnings);
    }
    out.predictor = std::make_unique<BasisPredictor>(std::move(basis), std::move(coef), binary);
    return out;
}

double median_pairwise_distance(const MatrixXd& z) {
    const Eigen::Index n = std::min<Eigen::Index>(z.rows(), 300);
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) dist.push_back((z.row(i) - z.row(j)).norm());
    if (dist.empty()) return 1.0;
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    return *mid > 0 ? *mid : 1.0;
}

MatrixXd gaussian_kernel(const MatrixXd& a, const MatrixXd& b, double bandwidth) {
    const VectorXd an = a.rowwise().squaredNorm();
    const VectorXd bn = b.rowwise().squaredNorm();
    MatrixXd k = -2.0 * a * b.transpose();
    k.colwise() += an;
    k.rowwise() += bn.transpose();
    const double c = -0.5 / (bandwidth * bandwidth);
    return (k.array().max(0.0) * c).exp();
}

class KernelPredictor final : public Predictor {
public:
    KernelPredictor(Standardizer s, MatrixXd centers, double bandwidth, MatrixXd coef, Eigen::RowVectorXd offset,
                    bool clip)
        : standardizer_(std::move(s)), centers_(std::move(centers)), bandwidth_(bandwidth),
          coef_(std::move(coef)), offset_(std::move(offset)), clip_(clip) {}

    MatrixXd predict(const MatrixXd& features) const override {
        MatrixXd out = gaussian_kernel(standardizer_.apply(features), centers_, bandwidth_) * coef_;
        out.rowwise() += offset_;
        if (clip_) out = out.cwiseMax(0.0).cwiseMin(1.0);
        return out;
    }

private:
    Standardizer standardizer_;
    MatrixXd centers_;
    double bandwidth_;
    MatrixXd coef_;
    Eigen::RowVectorXd offset_;
    bool clip_;
};

// Kernel ridge with a Nystrom basis: minimizes |T - K_nm a|^2 + n*ridge a' K_mm a.
// With as many landmarks as rows this is exact kernel ridge regression.
FittedLearner fit_kernel_ridge(const LearnerSpec& spec, const MatrixXd& x, const MatrixXd& t, bool binary) {
    FittedLearner out;
    Standardizer s(x);
    const MatrixXd z = s.apply(x);
    const Eigen::Index n = z.rows();
    const double h = spec.bandwidth > 0 ? spec.bandwidth : spec.bandwidth_scale * median_pairwise_distance(z);

    const Eigen::Index m = std::min<Eigen::Index>(spec.landmarks, n);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    if (m < n) {
        Rng rng(derive_seed(static_cast<std::uint64_t>(n), {stream::landmarks}));
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(static_cast<std::size_t>(m));
        std::sort(rows.begin(), rows.end());
    }
    MatrixXd centers(m, z.cols());
    for (Eigen::Index i = 0; i < m; ++i) centers.row(i) = z.row(rows[static_cast<std::size_t>(i)]);

    const Eigen::RowVectorXd offset = t.colwise().mean();
    const MatrixXd tc = t.rowwise() - offset;
    const MatrixXd knm = gaussian_kernel(z, centers, h);
    const MatrixXd kmm = gaussian_kernel(centers, centers, h);
    MatrixXd lhs = knm.transpose() * knm + static_cast<double>(n) * spec.ridge * kmm;
    lhs.diagonal().array() += 1e-10 * lhs.diagonal().mean();
    MatrixXd coef = lhs.ldlt().solve(knm.transpose() * tc);
    if (!coef.allFinite()) {
        out.warnings.push_back("kernel ridge system was singular; predicting the mean");
        coef.setZero();
    }
    out.predictor = std::make_unique<KernelPredictor>(std::move(s), std::move(centers), h, std::move(coef), offset, binary);
    return out;
}

class NeighborsPredictor final : public Predictor {
public:
    NeighborsPredictor(Standardizer s, MatrixXd train, MatrixXd targets, int k)
        : standardizer_(std::move(s)), train_(std::move(train)), targets_(std::move(targets)), k_(k) {}

    MatrixXd predict(const MatrixXd& features) const override {
        const MatrixXd z = standardizer_.apply(features);
        const Eigen::Index n = train_.rows();
        MatrixXd out(z.rows(), targets_.cols());
        std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const VectorXd d2 = (train_.rowwise() - z.row(r)).rowwise().squaredNorm();
            for (Eigen::Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = {d2[i], i};
            std::nth_element(dist.begin(), dist.begin() + (k_ - 1), dist.end());
            std::sort(dist.begin(), dist.begin() + k_);
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(targets_.cols());
            for (int j = 0; j < k_; ++j) acc += targets_.row(dist[static_cast<std::size_t>(j)].second);
            out.row(r) = acc / k_;
        }
        return out;
    }

private:
    Standardizer standardizer_;
    MatrixXd train_;
    MatrixXd targets_;
    int k_;
};

}  // namespace

FittedLearner fit_learner(const LearnerSpec& spec, const MatrixXd& features, const MatrixXd& targets, bool binary) {
    spec.validate();
    if (features.rows() != targets.rows()) throw Error("features and targets have different row counts");
    if (features.rows() < 2) throw Error("learner needs at least two training rows");
    if (binary && ((targets.array() != 0.0) && (targets.array() != 1.0)).any())
        throw Error("binary target contains values other than 0 and 1");

    if (spec.kind == LearnerKind::ConstantMean || features.cols() == 0) {
        FittedLearner out;
        out.predictor = std::make_unique<ConstantPredictor>(targets.colwise().mean());
        return out;
    }
    switch (spec.kind) {
        case LearnerKind::Linear: return fit_basis(features, targets, 1, false, binary);
        case LearnerKind::Polynomial: return fit_basis(features, targets, spec.degree, spec.interactions, binary);
        case LearnerKind::KernelRidge: return fit_kernel_ridge(spec, features, targets, binary);
        case LearnerKind::NearestNeighbors: {
            const int n = static_cast<int>(features.rows());
            int k = spec.k_sqrt_n ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))) : spec.k;
            k = std::min(k, n);
            Standardizer s(features);
            MatrixXd z = s.apply(features);
            FittedLearner out;
            out.predictor = std::make_unique<NeighborsPredictor>(std::move(s), std::move(z), targets, k);
            return out;
        }
        case LearnerKind::ConstantMean: break;
    }
    throw Error("unhandled learner kind");
}

FittedLearner fit_learner(const LearnerSpec& spec, const MatrixXd& features, const VectorXd& target, bool binary) {
    return fit_learner(spec, features, MatrixXd(target), binary);
}

}  // namespace medsel
