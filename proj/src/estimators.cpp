#include "nitrial/estimators.hpp"

#include <cmath>

#include "nitrial/errors.hpp"
#include "nitrial/logit.hpp"
#include "nitrial/stats.hpp"

namespace nitrial {

void NiRule::validate() const {
    if (!std::isfinite(margin) || margin >= 0.0) {
        throw ConfigInvalid("non-inferiority margin must be finite and negative");
    }
    if (!(alpha > 0.0) || alpha >= 0.5) {
        throw ConfigInvalid("alpha must lie in (0, 0.5)");
    }
}

void PriorSpec::validate() const {
    if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd) ||
        !(vague_sd > 0.0) || !std::isfinite(vague_sd)) {
        throw ConfigInvalid("prior needs a finite mean and positive sds");
    }
}

bool decide_ni(double lower_bound, const NiRule& rule) {
    rule.validate();
    return lower_bound > rule.margin;
}

namespace {

DesignMatrix outcome_design(const AnalysisDataset& d) {
    std::vector<std::pair<std::string, Eigen::VectorXd>> cols;
    cols.emplace_back("intercept", Eigen::VectorXd::Ones(d.size()));
    cols.emplace_back("z", d.z);
    for (Eigen::Index j = 0; j < d.covariates.cols(); ++j) {
        cols.emplace_back(d.covariate_names[static_cast<std::size_t>(j)],
                          d.covariates.col(j));
    }
    return DesignMatrix::from_columns(cols);
}

EstimateResult arm_contrast_from_ols(const std::string& name, const FitResult& fit,
                                     const NiRule& rule) {
    EstimateResult r;
    r.estimator = name;
    r.point = fit.coefficients[1];
    r.se = std::sqrt(fit.covariance(1, 1));
    const double df = static_cast<double>(fit.n_used) -
                      static_cast<double>(fit.coefficients.size());
    const double crit = t_quantile(1.0 - rule.alpha, df);
    r.lower = r.point - crit * r.se;
    r.upper = r.point + crit * r.se;
    r.ni_declared = decide_ni(r.lower, rule);
    r.rank = fit.rank;
    r.condition = fit.gram_condition;
    r.p_value = wald_p_value(r.point, r.se);
    return r;
}

AnalysisDataset subset(const AnalysisDataset& d, const std::vector<Eigen::Index>& keep) {
    AnalysisDataset out;
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    out.y.resize(m);
    out.z.resize(m);
    out.c.resize(m);
    out.covariates.resize(m, d.covariates.cols());
    out.covariate_names = d.covariate_names;
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index i = keep[static_cast<std::size_t>(r)];
        out.y[r] = d.y[i];
        out.z[r] = d.z[i];
        out.c[r] = d.c[i];
        out.covariates.row(r) = d.covariates.row(i);
    }
    return out;
}

}  // namespace

EstimateResult estimate_itt(const AnalysisDataset& d, const NiRule& rule) {
    d.validate();
    rule.validate();
    const FitResult fit = ols_fit(outcome_design(d), d.y);
    return arm_contrast_from_ols("itt", fit, rule);
}

EstimateResult estimate_pp(const AnalysisDataset& d, const NiRule& rule) {
    d.validate();
    rule.validate();
    std::vector<Eigen::Index> compliers;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d.c[i] == 1.0) compliers.push_back(i);
    }
    const AnalysisDataset sub = subset(d, compliers);
    if (sub.size() < d.covariates.cols() + 3 || sub.z.sum() == 0.0 ||
        sub.z.sum() == static_cast<double>(sub.size())) {
        throw InsufficientCompliers("per-protocol set lacks compliers in both arms");
    }
    const FitResult fit = ols_fit(outcome_design(sub), sub.y);
    EstimateResult r = arm_contrast_from_ols("pp", fit, rule);
    r.dropped = d.size() - sub.size();
    return r;
}

EstimateResult estimate_ipw(const AnalysisDataset& d, const NiRule& rule,
                            const IpwOptions& opts,
                            const std::vector<Eigen::Index>& weight_covariates) {
    d.validate();
    rule.validate();
    constexpr double kPositivityFloor = 1e-6;

    std::vector<Eigen::Index> wc = weight_covariates;
    if (wc.empty()) {
        for (Eigen::Index j = 0; j < d.covariates.cols(); ++j) wc.push_back(j);
    }
    for (Eigen::Index j : wc) {
        if (j < 0 || j >= d.covariates.cols()) {
            throw ConfigInvalid("weight covariate index out of range");
        }
    }

    // Arm-specific compliance models give each complier an inverse
    // probability weight. A fully compliant arm needs no model: everyone
    // has probability one.
    Eigen::VectorXd phat = Eigen::VectorXd::Zero(d.size());
    std::vector<char> drop(static_cast<std::size_t>(d.size()), 0);
    Eigen::Index separation_cells = 0;
    for (int arm = 0; arm <= 1; ++arm) {
        std::vector<Eigen::Index> members;
        double csum = 0.0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (d.z[i] == static_cast<double>(arm)) {
                members.push_back(i);
                csum += d.c[i];
            }
        }
        if (csum == static_cast<double>(members.size())) {
            for (Eigen::Index i : members) phat[i] = 1.0;
            continue;
        }
        if (csum == 0.0) {
            continue;  // no compliers to weight; caught below
        }
        const Eigen::Index m = static_cast<Eigen::Index>(members.size());
        std::vector<std::pair<std::string, Eigen::VectorXd>> cols;
        cols.emplace_back("intercept", Eigen::VectorXd::Ones(m));
        for (Eigen::Index j : wc) {
            Eigen::VectorXd col(m);
            for (Eigen::Index r = 0; r < m; ++r) {
                col[r] = d.covariates(members[static_cast<std::size_t>(r)], j);
            }
            cols.emplace_back(d.covariate_names[static_cast<std::size_t>(j)], col);
        }
        Eigen::VectorXd carm(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            carm[r] = d.c[members[static_cast<std::size_t>(r)]];
        }
        const LogitFit fit = logit_fit(DesignMatrix::from_columns(cols), carm);
        separation_cells += static_cast<Eigen::Index>(fit.separation_cells.size());
        for (Eigen::Index r = 0; r < m; ++r) {
            phat[members[static_cast<std::size_t>(r)]] = fit.fitted_probabilities[r];
        }
        if (opts.separation == SeparationPolicy::drop_and_count) {
            for (const SeparationCell& cell : fit.separation_cells) {
                if (cell.outcome == 1) {
                    for (Eigen::Index r : cell.observations) {
                        drop[static_cast<std::size_t>(members[static_cast<std::size_t>(r)])] = 1;
                    }
                }
            }
        }
    }

    std::vector<Eigen::Index> keep;
    Eigen::Index dropped = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d.c[i] != 1.0) continue;
        if (drop[static_cast<std::size_t>(i)]) {
            ++dropped;
            continue;
        }
        if (phat[i] < kPositivityFloor) {
            throw PositivityViolation("fitted compliance probability below 1e-6");
        }
        keep.push_back(i);
    }
    const AnalysisDataset sub = subset(d, keep);
    if (sub.size() < 3 || sub.z.sum() == 0.0 ||
        sub.z.sum() == static_cast<double>(sub.size())) {
        throw InsufficientCompliers("weighted set lacks compliers in both arms");
    }

    Eigen::VectorXd w(sub.size());
    for (Eigen::Index r = 0; r < sub.size(); ++r) {
        w[r] = 1.0 / phat[keep[static_cast<std::size_t>(r)]];
    }
    const DesignMatrix design = DesignMatrix::from_columns(
        {{"intercept", Eigen::VectorXd::Ones(sub.size())}, {"z", sub.z}});
    const FitResult fit = wls_sandwich_fit(design, sub.y, w);

    EstimateResult r;
    r.estimator = "ipw";
    r.point = fit.coefficients[1];
    r.se = std::sqrt(fit.covariance(1, 1));
    const double crit = normal_quantile(1.0 - rule.alpha);
    r.lower = r.point - crit * r.se;
    r.upper = r.point + crit * r.se;
    r.ni_declared = decide_ni(r.lower, rule);
    r.dropped = dropped;
    r.separation_cells = separation_cells;
    r.rank = fit.rank;
    r.condition = fit.gram_condition;
    r.p_value = wald_p_value(r.point, r.se);
    return r;
}

EstimateResult estimate_iv_interaction(const AnalysisDataset& d, const NiRule& rule,
                                       Eigen::Index instrument_covariate) {
    d.validate();
    rule.validate();
    if (instrument_covariate < 0 || instrument_covariate >= d.covariates.cols()) {
        throw ConfigInvalid("instrument covariate index out of range");
    }
    const Eigen::Index n = d.size();
    const Eigen::VectorXd xc = d.covariates.col(instrument_covariate);
    const Eigen::VectorXd c0 = ((1.0 - d.z.array()) * d.c.array()).matrix();
    const Eigen::VectorXd c1 = (d.z.array() * d.c.array()).matrix();

    const DesignMatrix endog =
        DesignMatrix::from_columns({{"c0", c0}, {"c1", c1}});
    const DesignMatrix exog = DesignMatrix::from_columns(
        {{"intercept", Eigen::VectorXd::Ones(n)},
         {d.covariate_names[static_cast<std::size_t>(instrument_covariate)], xc}});
    const DesignMatrix instruments = DesignMatrix::from_columns(
        {{"z", d.z}, {"zx", (d.z.array() * xc.array()).matrix()}});

    const FitResult fit = tsls_fit(d.y, endog, exog, instruments);

    EstimateResult r;
    r.estimator = "iv_interaction";
    r.point = fit.coefficients[1] - fit.coefficients[0];
    r.se = std::sqrt(fit.covariance(1, 1) + fit.covariance(0, 0) -
                     2.0 * fit.covariance(1, 0));
    const double crit = normal_quantile(1.0 - rule.alpha);
    r.lower = r.point - crit * r.se;
    r.upper = r.point + crit * r.se;
    r.ni_declared = decide_ni(r.lower, rule);
    r.rank = fit.rank;
    r.condition = fit.gram_condition;
    r.p_value = wald_p_value(r.point, r.se);
    return r;
}

EstimateResult estimate_iv_bayes(const AnalysisDataset& d, const PriorSpec& prior,
                                 const ChainConfig& cfg, const NiRule& rule) {
    d.validate();
    prior.validate();
    rule.validate();
    const Eigen::Index n = d.size();

    // Stage 1: receipt probabilities from arm means (OLS on the arm
    // indicator), plugged in as regressors.
    const DesignMatrix stage1 = DesignMatrix::from_columns(
        {{"intercept", Eigen::VectorXd::Ones(n)}, {"z", d.z}});
    const Eigen::VectorXd c0 = ((1.0 - d.z.array()) * d.c.array()).matrix();
    const Eigen::VectorXd c1 = (d.z.array() * d.c.array()).matrix();
    const FitResult f0 = ols_fit(stage1, c0);
    const FitResult f1 = ols_fit(stage1, c1);
    const Eigen::VectorXd c0_hat = stage1.values * f0.coefficients;
    const Eigen::VectorXd c1_hat = stage1.values * f1.coefficients;

    // Stage 2: Bayesian linear model with the informative prior on the
    // standard-receipt coefficient.
    std::vector<std::pair<std::string, Eigen::VectorXd>> cols;
    cols.emplace_back("intercept", Eigen::VectorXd::Ones(n));
    cols.emplace_back("c0_hat", c0_hat);
    cols.emplace_back("c1_hat", c1_hat);
    for (Eigen::Index j = 0; j < d.covariates.cols(); ++j) {
        cols.emplace_back(d.covariate_names[static_cast<std::size_t>(j)],
                          d.covariates.col(j));
    }
    const DesignMatrix stage2 = DesignMatrix::from_columns(cols);

    std::vector<NormalPrior> priors(static_cast<std::size_t>(stage2.cols()),
                                    NormalPrior{0.0, prior.vague_sd});
    priors[1] = NormalPrior{prior.mean, prior.sd};

    const GibbsDraws draws =
        gibbs_linear_draws(d.y, stage2, priors, InverseGammaPrior{}, cfg);
    const Eigen::VectorXd contrast =
        draws.coefficients.col(2) - draws.coefficients.col(1);
    const ParameterSummary s = summarize_draws(contrast);

    EstimateResult r;
    r.estimator = "iv_bayes";
    r.point = s.mean;
    r.se = s.sd;
    r.lower = quantile(contrast, rule.alpha);
    r.upper = quantile(contrast, 1.0 - rule.alpha);
    r.ni_declared = decide_ni(r.lower, rule);
    r.chain = ChainDiagnostics{s.mcse_mean, s.split_rhat,
                               static_cast<int>(contrast.size())};
    return r;
}

EstimateResult estimate_itt(const TrialDataset& d, const NiRule& rule) {
    return estimate_itt(AnalysisDataset::from_trial(d), rule);
}

EstimateResult estimate_pp(const TrialDataset& d, const NiRule& rule) {
    return estimate_pp(AnalysisDataset::from_trial(d), rule);
}

EstimateResult estimate_ipw(const TrialDataset& d, const NiRule& rule,
                            const IpwOptions& opts) {
    return estimate_ipw(AnalysisDataset::from_trial(d), rule, opts, {});
}

EstimateResult estimate_iv_interaction(const TrialDataset& d, const NiRule& rule) {
    return estimate_iv_interaction(AnalysisDataset::from_trial(d), rule, 0);
}

EstimateResult estimate_iv_bayes(const TrialDataset& d, const PriorSpec& prior,
                                 const ChainConfig& cfg, const NiRule& rule) {
    return estimate_iv_bayes(AnalysisDataset::from_trial(d), prior, cfg, rule);
}

EstimandAdvice advise_estimand(bool trial_specific_ies_occur, bool identifiable) {
    EstimandAdvice a;
    if (!trial_specific_ies_occur) {
        a.n_estimands = 1;
        a.primary = "single primary estimand chosen on clinical grounds";
    } else if (identifiable) {
        a.n_estimands = 1;
        a.primary =
            "single primary estimand addressing trial-specific intercurrent "
            "events with a hypothetical strategy";
    } else {
        a.n_estimands = 2;
        a.primary = "primary estimand chosen on clinical grounds";
        a.secondary =
            "secondary hypothetical estimand for the trial-specific "
            "intercurrent events";
    }
    return a;
}

}  // namespace nitrial
