#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nitrial/design.hpp"

namespace nitrial {

struct NormalPrior {
    double mean = 0.0;
    double sd = 1000.0;
};

struct InverseGammaPrior {
    double shape = 0.001;
    double rate = 0.001;
};

struct ChainConfig {
    int iterations = 10000;
    int burn_in = 1000;
    std::uint64_t seed = 0;

    void validate() const;  // burn_in < iterations, iterations >= 1000
};

struct ParameterSummary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, q975 = 0.0;
    double mcse_mean = 0.0;    // batch-means Monte Carlo SE of the mean
    double split_rhat = 0.0;   // split-chain potential scale reduction
};

struct PosteriorSummary {
    std::vector<ParameterSummary> params;  // one per design column
    int kept_draws = 0;
};

// Summarize one column of kept draws (used for coefficient and contrast
// summaries alike).
ParameterSummary summarize_draws(const Eigen::VectorXd& draws);

// Conjugate Gibbs sampler for the normal linear model with independent
// normal priors on coefficients and an inverse-gamma prior on the residual
// variance. Coefficients are drawn jointly from their multivariate-normal
// full conditional; data enter only through X'X, X'y, y'y, so draws are
// invariant to row order. Kept draws are returned column-per-coefficient.
struct GibbsDraws {
    Eigen::MatrixXd coefficients;  // kept x cols
    Eigen::VectorXd sigma2;        // kept
};

GibbsDraws gibbs_linear_draws(const Eigen::VectorXd& y, const DesignMatrix& design,
                              const std::vector<NormalPrior>& coef_priors,
                              const InverseGammaPrior& variance_prior,
                              const ChainConfig& cfg);

PosteriorSummary gibbs_linear(const Eigen::VectorXd& y, const DesignMatrix& design,
                              const std::vector<NormalPrior>& coef_priors,
                              const InverseGammaPrior& variance_prior,
                              const ChainConfig& cfg);

}  // namespace nitrial
