#include "medsel/data.hpp"

#include "medsel/csv.hpp"
#include "medsel/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

namespace medsel {

Dataset::Dataset(VectorXd d, MatrixXd x, MatrixXd m, VectorXd y, std::vector<std::string> x_names,
                 std::vector<std::string> m_names)
    : d_(std::move(d)), x_(std::move(x)), m_(std::move(m)), y_(std::move(y)),
      x_names_(std::move(x_names)), m_names_(std::move(m_names)) {
    const auto n = y_.size();
    if (n < 1) throw Error("dataset must contain at least one observation");
    if (d_.size() != n || x_.rows() != n || m_.rows() != n)
        throw Error("dataset columns have inconsistent row counts");
    if (m_.cols() < 1) throw Error("dataset needs at least one candidate mediator");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (d_[i] != 0.0 && d_[i] != 1.0)
            throw Error("non-binary treatment at row " + std::to_string(i + 1));
    }
    if (!d_.allFinite() || !x_.allFinite() || !m_.allFinite() || !y_.allFinite())
        throw Error("dataset contains missing or non-finite values");

    if (x_names_.empty())
        for (Eigen::Index j = 0; j < x_.cols(); ++j) x_names_.push_back("X" + std::to_string(j + 1));
    if (m_names_.empty())
        for (Eigen::Index j = 0; j < m_.cols(); ++j) m_names_.push_back("M" + std::to_string(j + 1));
    if (static_cast<Eigen::Index>(x_names_.size()) != x_.cols() ||
        static_cast<Eigen::Index>(m_names_.size()) != m_.cols())
        throw Error("column name count does not match matrix width");
}

MediatorSet::MediatorSet(std::vector<int> indices, int p) : indices_(std::move(indices)), p_(p) {
    if (p < 0) throw Error("mediator dimension must be nonnegative");
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    for (int j : indices_)
        if (j < 0 || j >= p) throw Error("mediator index " + std::to_string(j + 1) + " outside 1.." + std::to_string(p));
}

MediatorSet MediatorSet::full(int p) {
    std::vector<int> all(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
    return MediatorSet(std::move(all), p);
}

bool MediatorSet::contains(int j) const {
    return std::binary_search(indices_.begin(), indices_.end(), j);
}

bool MediatorSet::includes(const MediatorSet& other) const {
    return std::includes(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end());
}

MediatorSet MediatorSet::complement() const {
    std::vector<int> rest;
    for (int j = 0; j < p_; ++j)
        if (!contains(j)) rest.push_back(j);
    return MediatorSet(std::move(rest), p_);
}

std::vector<int> to_z_index(const MediatorSet& ms) {
    std::vector<int> z{0};
    for (int j : ms.indices()) z.push_back(j + 1);
    return z;
}

MatrixXd ResidualizedData::rz() const {
    MatrixXd z(n(), p() + 1);
    z.col(0) = rd;
    z.rightCols(p()) = rm;
    return z;
}

ResidualizedData residualize(const Dataset& data, const VectorXd& mu_y, const VectorXd& mu_d,
                             const MatrixXd& mu_m) {
    if (mu_y.size() != data.n() || mu_d.size() != data.n() || mu_m.rows() != data.n() ||
        mu_m.cols() != data.p())
        throw Error("nuisance predictions do not match the dataset dimensions");
    return ResidualizedData{data.y() - mu_y, data.d() - mu_d, data.m() - mu_m};
}

namespace {

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    auto first = cell.find_first_not_of(" \t");
    auto last = cell.find_last_not_of(" \t");
    if (first == std::string::npos)
        throw Error("missing value in column '" + column + "' at row " + std::to_string(row));
    std::string_view s(cell.data() + first, last - first + 1);
    if (s == "NA" || s == "NaN" || s == "nan" || s == "NULL")
        throw Error("missing value in column '" + column + "' at row " + std::to_string(row));
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error("non-numeric value '" + std::string(s) + "' in column '" + column + "' at row " +
                    std::to_string(row));
    return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const ColumnRoles& roles) {
    if (roles.treatment.empty() || roles.outcome.empty())
        throw Error("column roles must name a treatment and an outcome");
    if (roles.mediators.empty()) throw Error("column roles must name at least one mediator");

    std::vector<std::string> assigned{roles.treatment, roles.outcome};
    assigned.insert(assigned.end(), roles.mediators.begin(), roles.mediators.end());
    assigned.insert(assigned.end(), roles.confounders.begin(), roles.confounders.end());
    std::set<std::string> seen;
    for (const auto& name : assigned)
        if (!seen.insert(name).second) throw Error("duplicate role assignment for column '" + name + "'");

    std::ifstream in(path);
    if (!in) throw Error("cannot open data file " + path.string());

    csv::Row header;
    if (!csv::read_record(in, header)) throw Error("data file " + path.string() + " is empty");
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    std::map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) position[header[c]] = c;
    auto locate = [&](const std::string& name) {
        auto it = position.find(name);
        if (it == position.end()) throw Error("column '" + name + "' not found in " + path.string());
        return it->second;
    };
    const std::size_t d_col = locate(roles.treatment);
    const std::size_t y_col = locate(roles.outcome);
    std::vector<std::size_t> m_cols, x_cols;
    for (const auto& name : roles.mediators) m_cols.push_back(locate(name));
    for (const auto& name : roles.confounders) x_cols.push_back(locate(name));

    std::vector<double> d, y, m, x;
    csv::Row row;
    std::size_t line = 1;
    while (csv::read_record(in, row)) {
        ++line;
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != header.size())
            throw Error("row " + std::to_string(line) + " has " + std::to_string(row.size()) +
                        " fields, expected " + std::to_string(header.size()));
        const double dv = parse_cell(row[d_col], line, roles.treatment);
        if (dv != 0.0 && dv != 1.0)
            throw Error("non-binary treatment value '" + row[d_col] + "' at row " + std::to_string(line));
        d.push_back(dv);
        y.push_back(parse_cell(row[y_col], line, roles.outcome));
        for (std::size_t k = 0; k < m_cols.size(); ++k) m.push_back(parse_cell(row[m_cols[k]], line, roles.mediators[k]));
        for (std::size_t k = 0; k < x_cols.size(); ++k) x.push_back(parse_cell(row[x_cols[k]], line, roles.confounders[k]));
    }
    const auto n = static_cast<Eigen::Index>(y.size());
    if (n == 0) throw Error("data file " + path.string() + " has no observations");

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    MatrixXd mm = Eigen::Map<RowMajor>(m.data(), n, static_cast<Eigen::Index>(m_cols.size()));
    MatrixXd xm = x_cols.empty() ? MatrixXd(n, 0)
                                 : MatrixXd(Eigen::Map<RowMajor>(x.data(), n, static_cast<Eigen::Index>(x_cols.size())));
    return Dataset(Eigen::Map<VectorXd>(d.data(), n), std::move(xm), std::move(mm), Eigen::Map<VectorXd>(y.data(), n),
                   roles.confounders, roles.mediators);
}

}  // namespace medsel
