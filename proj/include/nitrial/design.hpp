#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nitrial {

// Dense column-major regressor matrix with unique column labels.
struct DesignMatrix {
    Eigen::MatrixXd values;           // rows x cols, column-major (Eigen default)
    std::vector<std::string> labels;  // one per column, unique

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    // Throws ImproperInput unless rows >= cols >= 1, all entries finite and
    // labels are unique.
    void validate() const;

    static DesignMatrix from_columns(const std::vector<std::pair<std::string, Eigen::VectorXd>>& cols);
};

}  // namespace nitrial
