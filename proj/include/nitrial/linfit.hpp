#pragma once

#include <Eigen/Dense>

#include "nitrial/design.hpp"

namespace nitrial {

enum class RankFlag { full_rank, deficient };

struct FitResult {
    Eigen::VectorXd coefficients;  // one per design column
    Eigen::MatrixXd covariance;    // symmetric PSD
    double residual_variance = 0.0;
    Eigen::Index n_used = 0;
    RankFlag rank = RankFlag::full_rank;
    double gram_condition = 0.0;   // condition number of the (weighted) Gram matrix
};

// Condition-number threshold above which a Gram matrix is treated as singular.
inline constexpr double kConditionLimit = 1e12;

// Ordinary least squares. Covariance = s^2 (X'X)^-1 with s^2 = RSS / (n - k).
// Throws RankDeficient when cond(X'X) > 1e12, DimensionMismatch on length mismatch.
FitResult ols_fit(const DesignMatrix& design, const Eigen::VectorXd& y);

// Weighted least squares with an HC1-style sandwich covariance:
//   (X'WX)^-1 [sum_i w_i^2 e_i^2 x_i x_i'] (X'WX)^-1 * n/(n-k).
// Point estimates coincide with frequency-weight fits; weights must be > 0.
FitResult wls_sandwich_fit(const DesignMatrix& design, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w);

// Two-stage least squares, exactly identified or over-identified in the
// instrument count. Stage 1 projects each endogenous column on
// [instruments, exog]; stage 2 regresses y on [projections, exog].
// Coefficients are ordered endogenous first, then exogenous. The residual
// variance uses the ACTUAL endogenous values and a 1/n denominator (no
// degrees-of-freedom correction), covariance = s^2 (Xhat'Xhat)^-1.
// Throws WeakOrCollinearInstruments when the stage-2 design is
// rank-deficient (cond > 1e12), e.g. when the predicted receipts are
// proportional across covariate levels.
FitResult tsls_fit(const Eigen::VectorXd& y, const DesignMatrix& endog,
                   const DesignMatrix& exog, const DesignMatrix& instruments);

}  // namespace nitrial
