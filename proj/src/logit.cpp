#include "nitrial/logit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nitrial/errors.hpp"
#include "nitrial/linfit.hpp"

namespace nitrial {

namespace {

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

struct VectorLess {
    bool operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a[i] < b[i]) return true;
            if (a[i] > b[i]) return false;
        }
        return false;
    }
};

}  // namespace

LogitFit logit_fit(const DesignMatrix& design, const Eigen::VectorXd& c) {
    design.validate();
    const Eigen::Index n = design.rows();
    if (c.size() != n) {
        throw DimensionMismatch("outcome length does not match the design");
    }
    if (!((c.array() == 0.0) || (c.array() == 1.0)).all()) {
        throw ImproperInput("logit_fit outcome must be 0/1");
    }

    LogitFit fit;
    fit.fitted_probabilities.resize(n);

    // Index observations by exact covariate pattern and flag the perfectly
    // predicted cells (all outcomes identical within the pattern).
    std::map<Eigen::VectorXd, std::vector<Eigen::Index>, VectorLess> cells;
    for (Eigen::Index i = 0; i < n; ++i) {
        cells[design.values.row(i).transpose()].push_back(i);
    }
    std::vector<Eigen::Index> kept;
    kept.reserve(static_cast<std::size_t>(n));
    for (const auto& [pattern, members] : cells) {
        double total = 0.0;
        for (Eigen::Index i : members) total += c[i];
        if (total == 0.0 || total == static_cast<double>(members.size())) {
            SeparationCell cell;
            cell.pattern = pattern;
            cell.outcome = total == 0.0 ? 0 : 1;
            cell.observations = members;
            for (Eigen::Index i : members) {
                fit.fitted_probabilities[i] = static_cast<double>(cell.outcome);
                fit.dropped_indices.push_back(i);
            }
            fit.separation_cells.push_back(std::move(cell));
        } else {
            kept.insert(kept.end(), members.begin(), members.end());
        }
    }
    std::sort(fit.dropped_indices.begin(), fit.dropped_indices.end());
    std::sort(kept.begin(), kept.end());

    fit.coefficients = Eigen::VectorXd::Zero(design.cols());
    if (kept.empty()) {
        fit.converged = true;
        return fit;
    }

    const Eigen::Index m = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd xall(m, design.cols());
    Eigen::VectorXd cy(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        xall.row(r) = design.values.row(kept[static_cast<std::size_t>(r)]);
        cy[r] = c[kept[static_cast<std::size_t>(r)]];
    }

    // Dropping cells can leave collinear columns (a covariate constant on
    // the remaining rows duplicates the intercept). Optimize over a maximal
    // independent column set; excluded columns keep coefficient zero.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xall);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    std::vector<Eigen::Index> active(
        qr.colsPermutation().indices().data(),
        qr.colsPermutation().indices().data() + rank);
    std::sort(active.begin(), active.end());

    Eigen::MatrixXd x(m, rank);
    for (Eigen::Index j = 0; j < rank; ++j) {
        x.col(j) = xall.col(active[static_cast<std::size_t>(j)]);
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(rank);
    constexpr int kMaxIter = 100;
    constexpr double kScoreTol = 1e-8;
    for (int it = 1; it <= kMaxIter; ++it) {
        fit.iterations = it;
        const Eigen::VectorXd eta = x * beta;
        const Eigen::VectorXd p = eta.unaryExpr([](double t) { return expit(t); });
        const Eigen::VectorXd score = x.transpose() * (cy - p);
        if (score.lpNorm<Eigen::Infinity>() < kScoreTol) {
            fit.converged = true;
            break;
        }
        const Eigen::ArrayXd wt = p.array() * (1.0 - p.array());
        const Eigen::MatrixXd hess =
            x.transpose() * (x.array().colwise() * wt).matrix();
        beta += hess.ldlt().solve(score);
        if (!beta.allFinite()) {
            throw ImproperInput("logit_fit diverged to non-finite coefficients");
        }
    }

    for (Eigen::Index j = 0; j < rank; ++j) {
        fit.coefficients[active[static_cast<std::size_t>(j)]] = beta[j];
    }
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = kept[static_cast<std::size_t>(r)];
        fit.fitted_probabilities[i] = expit(x.row(r).dot(beta));
    }
    return fit;
}

}  // namespace nitrial
