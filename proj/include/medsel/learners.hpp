#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace medsel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class LearnerKind { ConstantMean, Linear, Polynomial, KernelRidge, NearestNeighbors };

/// One member of the nuisance-regression library.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::ConstantMean;

    // Polynomial
    int degree = 2;
    bool interactions = true;

    // KernelRidge: the Gaussian bandwidth is bandwidth_scale times the median
    // pairwise distance of the (standardized) training features, unless
    // bandwidth > 0 fixes it. The penalty enters as n * ridge.
    double bandwidth = 0.0;
    double bandwidth_scale = 1.0;
    double ridge = 1e-3;
    int landmarks = 100;

    // NearestNeighbors: k, or ceil(sqrt(n_train)) when k_sqrt_n is set.
    int k = 10;
    bool k_sqrt_n = false;

    std::string name() const;
    void validate() const;

    static LearnerSpec constant_mean();
    static LearnerSpec linear();
    static LearnerSpec polynomial(int degree, bool interactions = true);
    static LearnerSpec kernel_ridge(double bandwidth_scale, double ridge = 1e-3);
    static LearnerSpec nearest_neighbors(int k);
    static LearnerSpec nearest_neighbors_sqrt_n();
};

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

/// constant-mean, linear/logistic, quadratic with interactions, Gaussian kernel
/// ridge at 0.5/1/2 x median distance, and k-NN with k = 10 and ceil(sqrt(n)).
std::vector<LearnerSpec> default_library();

/// A fitted regression. predict() returns one column per fitted target.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual MatrixXd predict(const MatrixXd& features) const = 0;
};

struct FittedLearner {
    std::unique_ptr<Predictor> predictor;
    std::vector<std::string> warnings;

    MatrixXd predict(const MatrixXd& features) const { return predictor->predict(features); }
};

/// Fits a learner to every column of `targets` at once (shared design work).
/// With `binary` set, targets must be 0/1 and predictions are probabilities.
FittedLearner fit_learner(const LearnerSpec& spec, const MatrixXd& features, const MatrixXd& targets,
                          bool binary);
FittedLearner fit_learner(const LearnerSpec& spec, const MatrixXd& features, const VectorXd& target,
                          bool binary);

/// Random partition of n rows into K folds of size floor(n/K) or ceil(n/K).
/// Returns 0-based fold ids.
std::vector<int> make_folds(int n, int K, std::uint64_t seed);

}  // namespace medsel
