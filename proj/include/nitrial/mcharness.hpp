#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nitrial/dgp.hpp"
#include "nitrial/estimators.hpp"

namespace nitrial {

enum class EstimatorId { itt, pp, ipw, iv_interaction, iv_bayes };

std::string estimator_id_name(EstimatorId id);
EstimatorId parse_estimator_id(const std::string& name);  // throws ConfigInvalid
std::vector<std::string> valid_estimator_ids();

// One configured estimator column. IV(Bayes) instances carry a prior and a
// label suffix so several priors can run side by side.
struct EstimatorSpec {
    EstimatorId id = EstimatorId::itt;
    std::string prior_label;     // iv_bayes only, e.g. "centred-precise"
    PriorSpec prior;             // iv_bayes only
    IpwOptions ipw;              // ipw only

    std::string column_label() const;  // e.g. "iv_bayes:centred-precise"
};

// Result of one estimator on one replication: an estimate or an error token.
struct CellResult {
    std::string estimator;
    std::optional<EstimateResult> estimate;
    std::string error;     // non-empty iff estimate is absent
    bool filtered = false; // set by filter_iv_outliers
};

struct ReplicationRow {
    std::string scenario;
    int replication = 0;
    std::uint64_t seed_index = 0;       // stream index used for the dataset
    std::uint64_t dataset_checksum = 0; // paired-structure witness
    std::vector<CellResult> cells;
};

struct MetricsSummary {
    std::string estimator;
    int nsim_used = 0;      // usable replications entering the metrics
    int failed = 0;
    int filtered = 0;
    double bias = 0.0;
    double bias_mcse = 0.0;             // empirical SE / sqrt(nsim_used)
    double empirical_se = 0.0;
    double mean_model_se = 0.0;
    double relative_se_error = 0.0;     // 100 * (mean model SE / empirical SE - 1)
    double ni_rate = 0.0;
    double ni_rate_mcse = 0.0;          // sqrt(p(1-p)/nsim_used)
    double precision_vs_itt = 0.0;      // 100 * ((empSE/empSE_itt)^2 - 1)
    double ipw_dropped_rate = 0.0;      // share of usable reps with >=1 dropped obs
    double mean_dropped = 0.0;          // mean dropped observations per usable rep
};

struct ChainSettings {
    int iterations = 10000;
    int burn_in = 1000;
};

// Run every configured estimator on one sampled dataset. Estimator errors
// are captured per cell and never abort the row.
ReplicationRow run_replication(const ScenarioSpec& spec,
                               const std::vector<EstimatorSpec>& estimators,
                               const NiRule& rule, const SeedStream& stream,
                               const ChainSettings& chain = {});

// Flag IV(interaction) cells whose SE exceeds 10x the same-replication ITT
// SE. Throws MissingReference if an IV cell has no usable ITT companion.
void filter_iv_outliers(std::vector<ReplicationRow>& rows);

// Per-estimator metrics over one scenario's rows. Requires >= 2 usable rows
// for each estimator that produced any estimate (throws InsufficientRows).
std::map<std::string, MetricsSummary> summarize(const std::vector<ReplicationRow>& rows,
                                                const GroundTruth& truth,
                                                const NiRule& rule);

struct StudyConfig {
    std::vector<std::string> scenario_ids;
    std::vector<EstimatorSpec> estimators;
    int nsim = 2000;
    std::uint64_t master_seed = 0;
    NiRule rule;
    ChainSettings chain;
    int threads = 1;  // 0 = hardware concurrency

    void validate() const;
};

struct ScenarioResult {
    ScenarioSpec spec;
    GroundTruth truth;
    std::vector<ReplicationRow> rows;
    std::map<std::string, MetricsSummary> summaries;
};

struct StudyResult {
    std::vector<ScenarioResult> scenarios;
};

// Replication r of scenario s draws its dataset from
// derive_stream(master, s*nsim + r); results are byte-identical for any
// thread budget.
StudyResult run_study(const StudyConfig& cfg);

// Serialization of study outputs (format_version 1).
std::string results_csv(const StudyResult& result);
std::string summary_json(const StudyResult& result, const StudyConfig& cfg);

}  // namespace nitrial
