#pragma once

#include <Eigen/Dense>

namespace nitrial {

double mean(const Eigen::VectorXd& v);
double sample_sd(const Eigen::VectorXd& v);  // ddof = 1

// Type-7 (linear interpolation) sample quantile of a copy of v.
double quantile(Eigen::VectorXd v, double p);

double normal_quantile(double p);            // inverse standard normal CDF
double t_quantile(double p, double df);      // inverse Student-t CDF
double normal_cdf(double x);

// Two-sided Wald p-value for estimate/se against zero.
double wald_p_value(double estimate, double se);

}  // namespace nitrial
