#include "medsel/crossfit.hpp"

#include "medsel/error.hpp"
#include "medsel/rng.hpp"

#include <algorithm>

namespace medsel {

VectorXd TargetEnsemble::mean_weights() const {
    if (per_fold.empty()) return {};
    VectorXd acc = VectorXd::Zero(per_fold.front().weights.size());
    for (const auto& f : per_fold) acc += f.weights;
    return acc / static_cast<double>(per_fold.size());
}

namespace {

MatrixXd take_rows(const MatrixXd& a, const std::vector<int>& rows) {
    MatrixXd out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = a.row(rows[r]);
    return out;
}

struct FoldOutput {
    MatrixXd continuous;  // test rows x (1 + p)
    VectorXd treatment;
    std::vector<EnsembleWeights> weights;  // Y, D, M...
    std::vector<std::string> warnings;
};

// Targets: continuous = [Y | M], binary = D. Returns predictions for the test rows.
FoldOutput fit_fold(const std::vector<LearnerSpec>& library, const MatrixXd& x_train, const MatrixXd& cont_train,
                    const VectorXd& bin_train, const MatrixXd& x_test, int inner_folds, std::uint64_t inner_seed) {
    const auto members = library.size();
    const Eigen::Index n_train = x_train.rows();
    const Eigen::Index n_cont = cont_train.cols();
    FoldOutput out;

    auto note = [&](const FittedLearner& f) {
        out.warnings.insert(out.warnings.end(), f.warnings.begin(), f.warnings.end());
    };

    // Out-of-fold predictions within the training set, one matrix per target.
    std::vector<MatrixXd> oof(static_cast<std::size_t>(n_cont) + 1, MatrixXd(members, n_train));
    if (members > 1) {
        const auto inner = make_folds(static_cast<int>(n_train), inner_folds, inner_seed);
        for (int f = 0; f < inner_folds; ++f) {
            std::vector<int> tr, te;
            for (int i = 0; i < n_train; ++i) (inner[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
            const MatrixXd xtr = take_rows(x_train, tr), xte = take_rows(x_train, te);
            const MatrixXd ctr = take_rows(cont_train, tr);
            const MatrixXd btr = take_rows(MatrixXd(bin_train), tr);
            for (std::size_t m = 0; m < members; ++m) {
                const auto fc = fit_learner(library[m], xtr, ctr, false);
                note(fc);
                const MatrixXd pc = fc.predict(xte);
                const auto fb = fit_learner(library[m], xtr, btr, true);
                note(fb);
                const MatrixXd pb = fb.predict(xte);
                for (std::size_t r = 0; r < te.size(); ++r) {
                    const auto i = te[r];
                    const auto rr = static_cast<Eigen::Index>(r);
                    oof[0](static_cast<Eigen::Index>(m), i) = pc(rr, 0);
                    oof[1](static_cast<Eigen::Index>(m), i) = pb(rr, 0);
                    for (Eigen::Index t = 1; t < n_cont; ++t) oof[static_cast<std::size_t>(t) + 1](static_cast<Eigen::Index>(m), i) = pc(rr, t);
                }
            }
        }
    }

    auto target_column = [&](std::size_t t) -> VectorXd {
        if (t == 0) return cont_train.col(0);
        if (t == 1) return bin_train;
        return cont_train.col(static_cast<Eigen::Index>(t) - 1);
    };
    for (std::size_t t = 0; t < oof.size(); ++t) {
        if (members > 1) {
            out.weights.push_back(stack(oof[t], target_column(t)));
        } else {
            out.weights.push_back({VectorXd::Ones(1), VectorXd::Zero(1)});
        }
    }

    out.continuous = MatrixXd::Zero(x_test.rows(), n_cont);
    out.treatment = VectorXd::Zero(x_test.rows());
    for (std::size_t m = 0; m < members; ++m) {
        const auto m_idx = static_cast<Eigen::Index>(m);
        const auto fc = fit_learner(library[m], x_train, cont_train, false);
        note(fc);
        const MatrixXd pc = fc.predict(x_test);
        const auto fb = fit_learner(library[m], x_train, bin_train, true);
        note(fb);
        const VectorXd pb = fb.predict(x_test).col(0);
        out.continuous.col(0) += out.weights[0].weights[m_idx] * pc.col(0);
        out.treatment += out.weights[1].weights[m_idx] * pb;
        for (Eigen::Index t = 1; t < n_cont; ++t)
            out.continuous.col(t) += out.weights[static_cast<std::size_t>(t) + 1].weights[m_idx] * pc.col(t);
    }
    return out;
}

}  // namespace

NuisanceFit crossfit(const Dataset& data, const std::vector<LearnerSpec>& library, const CrossfitOptions& opts) {
    if (library.empty()) throw Error("learner library is empty");
    if (!(opts.clip_eps >= 0.0 && opts.clip_eps < 0.5)) throw Error("clip_eps must lie in [0, 0.5)");
    for (const auto& spec : library) spec.validate();
    const int n = data.n();
    const int p = data.p();

    NuisanceFit fit;
    fit.K = opts.K;
    fit.clip_eps = opts.clip_eps;
    fit.fold_assignment = make_folds(n, opts.K, derive_seed(opts.seed, {stream::outer_folds}));
    for (const auto& spec : library) fit.member_names.push_back(spec.name());

    MatrixXd continuous(n, p + 1);
    continuous.col(0) = data.y();
    continuous.rightCols(p) = data.m();

    std::vector<std::vector<int>> train(static_cast<std::size_t>(opts.K)), test(static_cast<std::size_t>(opts.K));
    for (int i = 0; i < n; ++i) {
        const int f = fit.fold_assignment[static_cast<std::size_t>(i)];
        for (int k = 0; k < opts.K; ++k) (k == f ? test : train)[static_cast<std::size_t>(k)].push_back(i);
    }
    for (int k = 0; k < opts.K; ++k)
        if (static_cast<int>(train[static_cast<std::size_t>(k)].size()) < std::max(2, opts.inner_folds))
            throw Error("training split too small for the inner stacking folds");

    std::vector<FoldOutput> folds(static_cast<std::size_t>(opts.K));
    std::vector<std::string> errors(static_cast<std::size_t>(opts.K));
#pragma omp parallel for num_threads(std::max(1, opts.threads)) schedule(dynamic)
    for (int k = 0; k < opts.K; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        try {
            folds[ku] = fit_fold(library, take_rows(data.x(), train[ku]), take_rows(continuous, train[ku]),
                                 take_rows(MatrixXd(data.d()), train[ku]).col(0), take_rows(data.x(), test[ku]),
                                 opts.inner_folds,
                                 derive_seed(opts.seed, {stream::inner_folds, static_cast<std::uint64_t>(k)}));
        } catch (const std::exception& e) {
            errors[ku] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw Error("cross-fitting failed: " + e);

    fit.mu_y_hat.resize(n);
    fit.mu_d_hat.resize(n);
    fit.mu_m_hat.resize(n, p);
    for (int k = 0; k < opts.K; ++k) {
        const auto& f = folds[static_cast<std::size_t>(k)];
        const auto& rows = test[static_cast<std::size_t>(k)];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto rr = static_cast<Eigen::Index>(r);
            fit.mu_y_hat[rows[r]] = f.continuous(rr, 0);
            fit.mu_d_hat[rows[r]] = f.treatment[rr];
            fit.mu_m_hat.row(rows[r]) = f.continuous.row(rr).tail(p);
        }
        for (const auto& w : f.warnings)
            if (std::find(fit.warnings.begin(), fit.warnings.end(), w) == fit.warnings.end()) fit.warnings.push_back(w);
    }

    std::vector<std::string> names{"Y", "D"};
    names.insert(names.end(), data.m_names().begin(), data.m_names().end());
    for (std::size_t t = 0; t < names.size(); ++t) {
        TargetEnsemble te;
        te.target = names[t];
        for (const auto& f : folds) te.per_fold.push_back(f.weights[t]);
        fit.per_target_ensemble.push_back(std::move(te));
    }

    // Zero-variance targets are predicted by their mean.
    auto flatten = [&](std::size_t t, auto&& column, auto&& assign) {
        if (column.maxCoeff() != column.minCoeff()) return;
        fit.per_target_ensemble[t].constant = true;
        fit.per_target_ensemble[t].per_fold.clear();
        assign(column.mean());
        fit.warnings.push_back("target " + names[t] + " has zero variance; predicting its mean");
    };
    flatten(0, data.y(), [&](double v) { fit.mu_y_hat.setConstant(v); });
    flatten(1, data.d(), [&](double v) { fit.mu_d_hat.setConstant(v); });
    for (int j = 0; j < p; ++j)
        flatten(static_cast<std::size_t>(j) + 2, data.m().col(j), [&](double v) { fit.mu_m_hat.col(j).setConstant(v); });

    fit.mu_d_hat = fit.mu_d_hat.cwiseMax(opts.clip_eps).cwiseMin(1.0 - opts.clip_eps);
    return fit;
}

NuisanceFit linear_nuisance(const Dataset& data) {
    const int n = data.n();
    const int p = data.p();
    MatrixXd design(n, data.q() + 1);
    design.col(0).setOnes();
    design.rightCols(data.q()) = data.x();
    MatrixXd targets(n, p + 2);
    targets.col(0) = data.y();
    targets.col(1) = data.d();
    targets.rightCols(p) = data.m();
    const MatrixXd coef = design.colPivHouseholderQr().solve(targets);
    const MatrixXd fitted = design * coef;

    NuisanceFit fit;
    fit.mu_y_hat = fitted.col(0);
    fit.mu_d_hat = fitted.col(1);
    fit.mu_m_hat = fitted.rightCols(p);
    fit.member_names = {"linear-insample"};
    return fit;
}

ResidualizedData residualize(const Dataset& data, const NuisanceFit& fit) {
    return residualize(data, fit.mu_y_hat, fit.mu_d_hat, fit.mu_m_hat);
}

}  // namespace medsel
