#pragma once

#include <optional>
#include <string>

#include "nitrial/dataset.hpp"
#include "nitrial/gibbs.hpp"
#include "nitrial/linfit.hpp"

namespace nitrial {

// Non-inferiority decision rule. Outcomes are oriented larger-is-better, so
// harm is a negative difference and NI is declared when the lower interval
// bound exceeds the (negative) margin. The two-sided interval level is
// 1 - 2*alpha.
struct NiRule {
    double margin = -0.3;
    double alpha = 0.025;

    void validate() const;
};

// Informative prior on the standard-vs-no-treatment effect; all other
// stage-2 coefficients get N(0, vague_sd^2).
struct PriorSpec {
    double mean = 0.0;
    double sd = 1.0;
    double vague_sd = 1000.0;

    void validate() const;
};

enum class SeparationPolicy { drop_and_count, keep_weight_one };

struct IpwOptions {
    SeparationPolicy separation = SeparationPolicy::drop_and_count;
};

struct ChainDiagnostics {
    double mcse = 0.0;
    double split_rhat = 0.0;
    int kept_draws = 0;
};

struct EstimateResult {
    std::string estimator;
    double point = 0.0;
    double se = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool ni_declared = false;
    // diagnostics
    Eigen::Index dropped = 0;          // observations removed (IPW separation, PP exclusions)
    Eigen::Index separation_cells = 0;
    RankFlag rank = RankFlag::full_rank;
    double condition = 0.0;            // stage-2 condition number (IV interaction)
    std::optional<ChainDiagnostics> chain;   // IV(Bayes) only
    std::optional<double> p_value;     // two-sided Wald, frequentist estimators only
};

bool decide_ni(double lower_bound, const NiRule& rule);

// --- the five estimators (single observed covariate x) ---

EstimateResult estimate_itt(const TrialDataset& d, const NiRule& rule);
EstimateResult estimate_pp(const TrialDataset& d, const NiRule& rule);
EstimateResult estimate_ipw(const TrialDataset& d, const NiRule& rule,
                            const IpwOptions& opts = {});
EstimateResult estimate_iv_interaction(const TrialDataset& d, const NiRule& rule);
EstimateResult estimate_iv_bayes(const TrialDataset& d, const PriorSpec& prior,
                                 const ChainConfig& cfg, const NiRule& rule);

// --- analysis-mode variants (arbitrary covariate sets) ---

EstimateResult estimate_itt(const AnalysisDataset& d, const NiRule& rule);
EstimateResult estimate_pp(const AnalysisDataset& d, const NiRule& rule);
// weight_covariates: column indices used in the compliance model (empty =
// all covariates).
EstimateResult estimate_ipw(const AnalysisDataset& d, const NiRule& rule,
                            const IpwOptions& opts = {},
                            const std::vector<Eigen::Index>& weight_covariates = {});
// instrument_covariate: index of the covariate whose treatment interaction
// forms the second instrument.
EstimateResult estimate_iv_interaction(const AnalysisDataset& d, const NiRule& rule,
                                       Eigen::Index instrument_covariate = 0);
EstimateResult estimate_iv_bayes(const AnalysisDataset& d, const PriorSpec& prior,
                                 const ChainConfig& cfg, const NiRule& rule);

// --- estimand choice guidance ---

struct EstimandAdvice {
    int n_estimands = 1;
    std::string primary;
    std::string secondary;  // empty unless two estimands are recommended
};

// trial_specific_ies_occur=false: a single primary estimand chosen on
// clinical considerations. occur && identifiable: a single primary estimand
// handling trial-specific intercurrent events with a hypothetical strategy.
// occur && !identifiable: a primary plus a secondary hypothetical estimand.
EstimandAdvice advise_estimand(bool trial_specific_ies_occur, bool identifiable);

}  // namespace nitrial
