#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace nitrial {

// Per-participant trial records. The latent covariate u exists only for
// simulated data and is never visible to estimators.
struct TrialDataset {
    Eigen::VectorXd y;  // outcome
    Eigen::VectorXd z;  // arm, 0/1
    Eigen::VectorXd c;  // compliance, 0/1
    Eigen::VectorXd x;  // observed binary baseline covariate
    std::optional<Eigen::VectorXd> u;  // latent binary covariate (simulation only)

    Eigen::Index size() const { return y.size(); }

    // Receipt indicators: c0 = 1[z=0 & c=1], c1 = 1[z=1 & c=1].
    Eigen::VectorXd receipt0() const;
    Eigen::VectorXd receipt1() const;

    // Throws ImproperInput on length mismatch, non-binary z/c/x, non-finite y
    // or an empty arm.
    void validate() const;
};

// General analysis-mode dataset: one or more baseline covariates.
struct AnalysisDataset {
    Eigen::VectorXd y;
    Eigen::VectorXd z;
    Eigen::VectorXd c;
    Eigen::MatrixXd covariates;              // n x k, may have k = 0
    std::vector<std::string> covariate_names;

    Eigen::Index size() const { return y.size(); }
    void validate() const;

    static AnalysisDataset from_trial(const TrialDataset& d);
};

}  // namespace nitrial
