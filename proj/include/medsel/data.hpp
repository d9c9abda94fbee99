#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace medsel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observed data O = (D, X, M, Y). Validated on construction and immutable after.
class Dataset {
public:
    Dataset(VectorXd d, MatrixXd x, MatrixXd m, VectorXd y,
            std::vector<std::string> x_names = {}, std::vector<std::string> m_names = {});

    const VectorXd& d() const { return d_; }
    const MatrixXd& x() const { return x_; }
    const MatrixXd& m() const { return m_; }
    const VectorXd& y() const { return y_; }
    const std::vector<std::string>& x_names() const { return x_names_; }
    const std::vector<std::string>& m_names() const { return m_names_; }

    int n() const { return static_cast<int>(y_.size()); }
    int p() const { return static_cast<int>(m_.cols()); }
    int q() const { return static_cast<int>(x_.cols()); }

private:
    VectorXd d_;
    MatrixXd x_;
    MatrixXd m_;
    VectorXd y_;
    std::vector<std::string> x_names_;
    std::vector<std::string> m_names_;
};

/// A subset of mediator columns. Indices are 0-based, sorted and unique.
class MediatorSet {
public:
    MediatorSet() = default;
    MediatorSet(std::vector<int> indices, int p);

    static MediatorSet full(int p);

    const std::vector<int>& indices() const { return indices_; }
    int p() const { return p_; }
    int size() const { return static_cast<int>(indices_.size()); }
    bool empty() const { return indices_.empty(); }
    bool contains(int j) const;
    bool includes(const MediatorSet& other) const;
    MediatorSet complement() const;

    bool operator==(const MediatorSet&) const = default;

private:
    std::vector<int> indices_;
    int p_ = 0;
};

/// Positions in Z = (D, M) covered by a mediator set: the treatment (position 0)
/// followed by 1 + j for every mediator j.
std::vector<int> to_z_index(const MediatorSet& ms);

/// Robinson residuals (Y - mu_Y, D - mu_D, M - mu_M).
struct ResidualizedData {
    VectorXd ry;
    VectorXd rd;
    MatrixXd rm;

    int n() const { return static_cast<int>(ry.size()); }
    int p() const { return static_cast<int>(rm.cols()); }
    /// [rd | rm], n x (p + 1).
    MatrixXd rz() const;
};

ResidualizedData residualize(const Dataset& data, const VectorXd& mu_y, const VectorXd& mu_d,
                             const MatrixXd& mu_m);

/// Which CSV column plays which causal role.
struct ColumnRoles {
    std::string treatment;
    std::string outcome;
    std::vector<std::string> mediators;
    std::vector<std::string> confounders;
};

Dataset load_csv(const std::filesystem::path& path, const ColumnRoles& roles);

}  // namespace medsel
