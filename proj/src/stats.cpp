#include "nitrial/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "nitrial/errors.hpp"

namespace nitrial {

double mean(const Eigen::VectorXd& v) {
    if (v.size() == 0) {
        throw ImproperInput("mean of an empty vector");
    }
    return v.mean();
}

double sample_sd(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    if (n < 2) {
        throw ImproperInput("sample_sd needs at least two values");
    }
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / static_cast<double>(n - 1));
}

double quantile(Eigen::VectorXd v, double p) {
    const Eigen::Index n = v.size();
    if (n == 0) {
        throw ImproperInput("quantile of an empty vector");
    }
    if (p < 0.0 || p > 1.0) {
        throw ImproperInput("quantile probability outside [0, 1]");
    }
    std::sort(v.data(), v.data() + n);
    const double h = p * static_cast<double>(n - 1);
    const Eigen::Index lo = static_cast<Eigen::Index>(std::floor(h));
    const Eigen::Index hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) {
        throw ImproperInput("normal_quantile probability outside (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<>(), p);
}

double t_quantile(double p, double df) {
    if (p <= 0.0 || p >= 1.0) {
        throw ImproperInput("t_quantile probability outside (0, 1)");
    }
    if (df <= 0.0) {
        throw ImproperInput("t_quantile needs positive degrees of freedom");
    }
    return boost::math::quantile(boost::math::students_t_distribution<>(df), p);
}

double normal_cdf(double x) {
    return boost::math::cdf(boost::math::normal_distribution<>(), x);
}

double wald_p_value(double estimate, double se) {
    if (se <= 0.0) {
        throw ImproperInput("wald_p_value needs a positive standard error");
    }
    return 2.0 * (1.0 - normal_cdf(std::abs(estimate / se)));
}

}  // namespace nitrial
