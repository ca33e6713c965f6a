#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nitrial/design.hpp"

namespace nitrial {

// A covariate pattern whose outcomes were all 0 or all 1 (perfect prediction).
struct SeparationCell {
    Eigen::VectorXd pattern;  // the covariate row
    int outcome = 0;          // the constant outcome in the cell
    std::vector<Eigen::Index> observations;
};

struct LogitFit {
    Eigen::VectorXd coefficients;         // logit scale, one per design column
    Eigen::VectorXd fitted_probabilities; // per observation, in [0,1]
    std::vector<SeparationCell> separation_cells;
    std::vector<Eigen::Index> dropped_indices;  // exactly the separated observations
    bool converged = false;
    int iterations = 0;
};

// Logistic regression by IRLS (Newton) on the Bernoulli log-likelihood.
// Convergence: max |score| < 1e-8, at most 100 iterations. Covariate
// patterns whose outcomes are all 0 or all 1 are recorded as separation
// cells, their observations dropped from the fit, and their fitted
// probabilities set to the constant outcome. Columns that become constant
// after dropping are removed from the optimization (coefficient 0).
// A non-converged fit is returned with converged=false, not thrown.
LogitFit logit_fit(const DesignMatrix& design, const Eigen::VectorXd& c);

}  // namespace nitrial
