#include "nitrial/dataset.hpp"

#include "nitrial/errors.hpp"

namespace nitrial {

namespace {

bool is_binary(const Eigen::VectorXd& v) {
    return ((v.array() == 0.0) || (v.array() == 1.0)).all();
}

}  // namespace

Eigen::VectorXd TrialDataset::receipt0() const {
    return ((1.0 - z.array()) * c.array()).matrix();
}

Eigen::VectorXd TrialDataset::receipt1() const {
    return (z.array() * c.array()).matrix();
}

void TrialDataset::validate() const {
    const Eigen::Index n = y.size();
    if (n == 0) {
        throw ImproperInput("dataset is empty");
    }
    if (z.size() != n || c.size() != n || x.size() != n || (u && u->size() != n)) {
        throw ImproperInput("dataset columns have mismatched lengths");
    }
    if (!y.allFinite()) {
        throw ImproperInput("outcome contains non-finite values");
    }
    if (!is_binary(z) || !is_binary(c) || !is_binary(x) || (u && !is_binary(*u))) {
        throw ImproperInput("z, c, x (and u when present) must be 0/1");
    }
    const double n1 = z.sum();
    if (n1 == 0.0 || n1 == static_cast<double>(n)) {
        throw ImproperInput("both randomization arms must be non-empty");
    }
}

void AnalysisDataset::validate() const {
    const Eigen::Index n = y.size();
    if (n == 0) {
        throw ImproperInput("dataset is empty");
    }
    if (z.size() != n || c.size() != n) {
        throw ImproperInput("dataset columns have mismatched lengths");
    }
    if (covariates.cols() > 0 && covariates.rows() != n) {
        throw ImproperInput("covariate rows must match the outcome length");
    }
    if (static_cast<Eigen::Index>(covariate_names.size()) != covariates.cols()) {
        throw ImproperInput("one name per covariate column is required");
    }
    if (!y.allFinite() || !covariates.allFinite()) {
        throw ImproperInput("outcome or covariates contain non-finite values");
    }
    if (!is_binary(z) || !is_binary(c)) {
        throw ImproperInput("z and c must be 0/1");
    }
    const double n1 = z.sum();
    if (n1 == 0.0 || n1 == static_cast<double>(n)) {
        throw ImproperInput("both randomization arms must be non-empty");
    }
}

AnalysisDataset AnalysisDataset::from_trial(const TrialDataset& d) {
    d.validate();
    AnalysisDataset a;
    a.y = d.y;
    a.z = d.z;
    a.c = d.c;
    a.covariates = d.x;
    a.covariate_names = {"x"};
    return a;
}

}  // namespace nitrial
