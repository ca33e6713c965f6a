#include "nitrial/gibbs.hpp"

#include <cmath>
#include <random>

#include "nitrial/errors.hpp"
#include "nitrial/stats.hpp"

namespace nitrial {

void ChainConfig::validate() const {
    if (iterations < 1000) {
        throw ConfigInvalid("chain needs at least 1000 iterations");
    }
    if (burn_in < 0 || burn_in >= iterations) {
        throw ConfigInvalid("burn-in must be non-negative and below the iteration count");
    }
}

ParameterSummary summarize_draws(const Eigen::VectorXd& draws) {
    const Eigen::Index n = draws.size();
    if (n < 4) {
        throw ImproperInput("summarize_draws needs at least four draws");
    }
    ParameterSummary s;
    s.mean = mean(draws);
    s.sd = sample_sd(draws);
    s.q025 = quantile(draws, 0.025);
    s.q05 = quantile(draws, 0.05);
    s.q50 = quantile(draws, 0.50);
    s.q95 = quantile(draws, 0.95);
    s.q975 = quantile(draws, 0.975);

    // Batch means with ~sqrt(n) batches.
    const Eigen::Index bsize = static_cast<Eigen::Index>(std::floor(std::sqrt(n)));
    const Eigen::Index nbatch = n / bsize;
    Eigen::VectorXd bmeans(nbatch);
    for (Eigen::Index b = 0; b < nbatch; ++b) {
        bmeans[b] = draws.segment(b * bsize, bsize).mean();
    }
    s.mcse_mean = sample_sd(bmeans) / std::sqrt(static_cast<double>(nbatch));

    // Split-chain potential scale reduction on the two halves.
    const Eigen::Index half = n / 2;
    const Eigen::VectorXd a = draws.head(half);
    const Eigen::VectorXd b = draws.segment(half, half);
    const double va = sample_sd(a) * sample_sd(a);
    const double vb = sample_sd(b) * sample_sd(b);
    const double w = 0.5 * (va + vb);
    if (w <= 0.0) {
        s.split_rhat = 1.0;
    } else {
        const double grand = 0.5 * (mean(a) + mean(b));
        const double bvar = static_cast<double>(half) *
                            ((mean(a) - grand) * (mean(a) - grand) +
                             (mean(b) - grand) * (mean(b) - grand));
        const double vplus =
            (static_cast<double>(half - 1) / static_cast<double>(half)) * w +
            bvar / static_cast<double>(half);
        s.split_rhat = std::sqrt(vplus / w);
    }
    return s;
}

GibbsDraws gibbs_linear_draws(const Eigen::VectorXd& y, const DesignMatrix& design,
                              const std::vector<NormalPrior>& coef_priors,
                              const InverseGammaPrior& variance_prior,
                              const ChainConfig& cfg) {
    design.validate();
    cfg.validate();
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (y.size() != n) {
        throw DimensionMismatch("response length does not match the design");
    }
    if (!y.allFinite()) {
        throw ImproperInput("response contains non-finite values");
    }
    if (static_cast<Eigen::Index>(coef_priors.size()) != k) {
        throw ImproperInput("one coefficient prior per design column is required");
    }
    for (const NormalPrior& p : coef_priors) {
        if (!(p.sd > 0.0) || !std::isfinite(p.sd) || !std::isfinite(p.mean)) {
            throw ImproperInput("coefficient priors need finite means and positive sds");
        }
    }
    if (!(variance_prior.shape > 0.0) || !(variance_prior.rate > 0.0)) {
        throw ImproperInput("variance prior needs positive shape and rate");
    }

    // The data enter only through these moments, so the sampler is exactly
    // invariant to row order.
    const Eigen::MatrixXd xtx = design.values.transpose() * design.values;
    const Eigen::VectorXd xty = design.values.transpose() * y;
    const double yty = y.squaredNorm();

    Eigen::VectorXd prior_prec(k);
    Eigen::VectorXd prior_mean(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        prior_prec[j] = 1.0 / (coef_priors[static_cast<std::size_t>(j)].sd *
                               coef_priors[static_cast<std::size_t>(j)].sd);
        prior_mean[j] = coef_priors[static_cast<std::size_t>(j)].mean;
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);

    const int kept = cfg.iterations - cfg.burn_in;
    GibbsDraws out;
    out.coefficients.resize(kept, k);
    out.sigma2.resize(kept);

    Eigen::VectorXd beta = prior_mean;
    double sigma2 = 1.0;
    Eigen::VectorXd zdraw(k);

    for (int it = 0; it < cfg.iterations; ++it) {
        // Coefficient block: the prior precision keeps the full-conditional
        // precision positive definite even when X'X is singular.
        Eigen::MatrixXd prec = xtx / sigma2;
        prec.diagonal() += prior_prec;
        Eigen::LLT<Eigen::MatrixXd> llt(prec);
        if (llt.info() != Eigen::Success) {
            throw ChainDiverged("coefficient full conditional is not positive definite");
        }
        const Eigen::VectorXd rhs =
            xty / sigma2 + prior_prec.cwiseProduct(prior_mean);
        const Eigen::VectorXd mu = llt.solve(rhs);
        for (Eigen::Index j = 0; j < k; ++j) zdraw[j] = std_normal(rng);
        beta = mu + llt.matrixU().solve(zdraw);

        // Variance block, conjugate inverse gamma.
        double rss = yty - 2.0 * beta.dot(xty) + beta.dot(xtx * beta);
        if (rss < 0.0) rss = 0.0;
        const double shape = variance_prior.shape + 0.5 * static_cast<double>(n);
        const double rate = variance_prior.rate + 0.5 * rss;
        std::gamma_distribution<double> gamma(shape, 1.0 / rate);
        const double g = gamma(rng);
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw ChainDiverged("variance full conditional produced a degenerate draw");
        }
        sigma2 = 1.0 / g;

        if (it >= cfg.burn_in) {
            out.coefficients.row(it - cfg.burn_in) = beta.transpose();
            out.sigma2[it - cfg.burn_in] = sigma2;
        }
    }
    return out;
}

PosteriorSummary gibbs_linear(const Eigen::VectorXd& y, const DesignMatrix& design,
                              const std::vector<NormalPrior>& coef_priors,
                              const InverseGammaPrior& variance_prior,
                              const ChainConfig& cfg) {
    const GibbsDraws draws = gibbs_linear_draws(y, design, coef_priors, variance_prior, cfg);
    PosteriorSummary out;
    out.kept_draws = static_cast<int>(draws.coefficients.rows());
    out.params.reserve(static_cast<std::size_t>(draws.coefficients.cols()));
    for (Eigen::Index j = 0; j < draws.coefficients.cols(); ++j) {
        out.params.push_back(summarize_draws(draws.coefficients.col(j)));
    }
    return out;
}

}  // namespace nitrial
