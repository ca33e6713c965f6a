#include "nitrial/linfit.hpp"

#include <cmath>
#include <limits>

#include "nitrial/errors.hpp"

namespace nitrial {

namespace {

struct GramInverse {
    Eigen::MatrixXd inverse;
    double condition = 0.0;
    bool singular = false;
};

// Symmetric-eigendecomposition inverse of a Gram matrix, with its condition
// number. Flags singularity instead of throwing so callers can pick the
// right error type.
GramInverse invert_gram(const Eigen::MatrixXd& gram) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) {
        throw ImproperInput("eigendecomposition of the Gram matrix failed");
    }
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double lmax = ev.maxCoeff();
    const double lmin = ev.minCoeff();
    GramInverse out;
    if (lmin <= 0.0 || lmax <= 0.0) {
        out.condition = std::numeric_limits<double>::infinity();
        out.singular = true;
        return out;
    }
    out.condition = lmax / lmin;
    if (out.condition > kConditionLimit) {
        out.singular = true;
        return out;
    }
    out.inverse = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();
    return out;
}

void check_response(const DesignMatrix& design, const Eigen::VectorXd& y) {
    design.validate();
    if (y.size() != design.rows()) {
        throw DimensionMismatch("response length does not match the design");
    }
    if (!y.allFinite()) {
        throw ImproperInput("response contains non-finite values");
    }
}

}  // namespace

FitResult ols_fit(const DesignMatrix& design, const Eigen::VectorXd& y) {
    check_response(design, y);
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();

    const Eigen::MatrixXd gram = design.values.transpose() * design.values;
    const GramInverse gi = invert_gram(gram);
    if (gi.singular) {
        throw RankDeficient("ols_fit: design is rank deficient");
    }

    FitResult fit;
    fit.coefficients = gi.inverse * (design.values.transpose() * y);
    const Eigen::VectorXd resid = y - design.values * fit.coefficients;
    // n == k is exact interpolation: zero residual variance by convention.
    fit.residual_variance =
        n > k ? resid.squaredNorm() / static_cast<double>(n - k) : 0.0;
    fit.covariance = fit.residual_variance * gi.inverse;
    fit.n_used = n;
    fit.rank = RankFlag::full_rank;
    fit.gram_condition = gi.condition;
    return fit;
}

FitResult wls_sandwich_fit(const DesignMatrix& design, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w) {
    check_response(design, y);
    if (w.size() != design.rows()) {
        throw DimensionMismatch("weight length does not match the design");
    }
    if (!w.allFinite() || (w.array() <= 0.0).any()) {
        throw NonPositiveWeight("wls_sandwich_fit weights must be positive and finite");
    }
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (n <= k) {
        throw InsufficientRows("wls_sandwich_fit needs more rows than columns");
    }

    const Eigen::MatrixXd xw = design.values.array().colwise() * w.array();
    const Eigen::MatrixXd gram = design.values.transpose() * xw;
    const GramInverse gi = invert_gram(gram);
    if (gi.singular) {
        throw RankDeficient("wls_sandwich_fit: weighted design is rank deficient");
    }

    FitResult fit;
    fit.coefficients = gi.inverse * (xw.transpose() * y);
    const Eigen::VectorXd resid = y - design.values * fit.coefficients;

    // HC1-style sandwich: bread = (X'WX)^-1, meat = sum w^2 e^2 x x',
    // scaled by n / (n - k).
    const Eigen::ArrayXd we = w.array() * resid.array();
    const Eigen::MatrixXd scored = design.values.array().colwise() * we;
    const Eigen::MatrixXd meat = scored.transpose() * scored;
    const double dof_scale = static_cast<double>(n) / static_cast<double>(n - k);
    fit.covariance = dof_scale * gi.inverse * meat * gi.inverse;
    fit.residual_variance =
        (w.array() * resid.array().square()).sum() / static_cast<double>(n - k);
    fit.n_used = n;
    fit.rank = RankFlag::full_rank;
    fit.gram_condition = gi.condition;
    return fit;
}

FitResult tsls_fit(const Eigen::VectorXd& y, const DesignMatrix& endog,
                   const DesignMatrix& exog, const DesignMatrix& instruments) {
    endog.validate();
    exog.validate();
    instruments.validate();
    const Eigen::Index n = y.size();
    if (endog.rows() != n || exog.rows() != n || instruments.rows() != n) {
        throw DimensionMismatch("tsls_fit blocks have mismatched row counts");
    }
    if (!y.allFinite()) {
        throw ImproperInput("response contains non-finite values");
    }
    if (instruments.cols() < endog.cols()) {
        throw ImproperInput("tsls_fit is under-identified");
    }
    const Eigen::Index k = endog.cols() + exog.cols();
    if (n <= k) {
        throw InsufficientRows("tsls_fit needs more rows than coefficients");
    }

    // Stage 1: project each treatment-receipt column on the full instrument
    // set (excluded instruments plus exogenous regressors).
    Eigen::MatrixXd zmat(n, instruments.cols() + exog.cols());
    zmat << instruments.values, exog.values;
    const GramInverse zgi = invert_gram(zmat.transpose() * zmat);
    if (zgi.singular) {
        throw WeakOrCollinearInstruments("tsls_fit: instrument matrix is rank deficient");
    }
    const Eigen::MatrixXd endog_hat =
        zmat * (zgi.inverse * (zmat.transpose() * endog.values));

    // Stage 2 on the projected receipts.
    Eigen::MatrixXd xhat(n, k);
    xhat << endog_hat, exog.values;
    const GramInverse xgi = invert_gram(xhat.transpose() * xhat);
    if (xgi.singular) {
        throw WeakOrCollinearInstruments(
            "tsls_fit: projected design is collinear (weak or redundant instruments)");
    }

    FitResult fit;
    fit.coefficients = xgi.inverse * (xhat.transpose() * y);

    // Residuals use the observed receipts, variance with a 1/n denominator.
    Eigen::MatrixXd xact(n, k);
    xact << endog.values, exog.values;
    const Eigen::VectorXd resid = y - xact * fit.coefficients;
    fit.residual_variance = resid.squaredNorm() / static_cast<double>(n);
    fit.covariance = fit.residual_variance * xgi.inverse;
    fit.n_used = n;
    fit.rank = RankFlag::full_rank;
    fit.gram_condition = xgi.condition;
    return fit;
}

}  // namespace nitrial
