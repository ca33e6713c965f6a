#include "nitrial/design.hpp"

#include <set>

#include "nitrial/errors.hpp"

namespace nitrial {

void DesignMatrix::validate() const {
    if (values.cols() < 1) {
        throw ImproperInput("design matrix needs at least one column");
    }
    if (values.rows() < values.cols()) {
        throw ImproperInput("design matrix has fewer rows than columns");
    }
    if (static_cast<Eigen::Index>(labels.size()) != values.cols()) {
        throw ImproperInput("design matrix needs one label per column");
    }
    if (!values.allFinite()) {
        throw ImproperInput("design matrix contains non-finite entries");
    }
    std::set<std::string> seen(labels.begin(), labels.end());
    if (static_cast<Eigen::Index>(seen.size()) != values.cols()) {
        throw ImproperInput("design matrix column labels must be unique");
    }
}

DesignMatrix DesignMatrix::from_columns(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& cols) {
    if (cols.empty()) {
        throw ImproperInput("from_columns needs at least one column");
    }
    const Eigen::Index n = cols.front().second.size();
    DesignMatrix d;
    d.values.resize(n, static_cast<Eigen::Index>(cols.size()));
    d.labels.reserve(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j].second.size() != n) {
            throw DimensionMismatch("from_columns: column length mismatch");
        }
        d.values.col(static_cast<Eigen::Index>(j)) = cols[j].second;
        d.labels.push_back(cols[j].first);
    }
    d.validate();
    return d;
}

}  // namespace nitrial
