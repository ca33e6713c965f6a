#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "nitrial/design.hpp"
#include "nitrial/errors.hpp"
#include "nitrial/gibbs.hpp"
#include "nitrial/linfit.hpp"
#include "nitrial/logit.hpp"
#include "nitrial/rng.hpp"

using namespace nitrial;

namespace {

DesignMatrix make_design(const Eigen::MatrixXd& m) {
    DesignMatrix d;
    d.values = m;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        d.labels.push_back("c" + std::to_string(j));
    }
    return d;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                              Eigen::Index cols, bool with_intercept) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = with_intercept && j == 0 ? 1.0 : gauss(rng);
        }
    }
    return m;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

}  // namespace

TEST_CASE("ols intercept only recovers mean and variance") {
    Eigen::MatrixXd m(3, 1);
    m << 1, 1, 1;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    const FitResult fit = ols_fit(make_design(m), y);
    CHECK(fit.coefficients[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fit.residual_variance == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ols exact interpolation has zero residual variance") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0, 1, 1;
    Eigen::VectorXd y(2);
    y << 3, 5;
    const FitResult fit = ols_fit(make_design(m), y);
    CHECK(fit.coefficients[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(fit.coefficients[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fit.residual_variance == 0.0);
}

TEST_CASE("ols matches an explicit normal-equations inverse") {
    std::mt19937_64 rng(101);
    const Eigen::MatrixXd m = random_matrix(rng, 50, 3, true);
    const Eigen::VectorXd y = random_vector(rng, 50);
    const FitResult fit = ols_fit(make_design(m), y);

    // Independent path: full-pivot LU inverse of the Gram matrix.
    const Eigen::MatrixXd xtx_inv =
        (m.transpose() * m).fullPivLu().inverse();
    const Eigen::VectorXd beta = xtx_inv * m.transpose() * y;
    CHECK((fit.coefficients - beta).lpNorm<Eigen::Infinity>() < 1e-10);

    const Eigen::VectorXd resid = y - m * beta;
    const double s2 = resid.squaredNorm() / (50.0 - 3.0);
    CHECK((fit.covariance - s2 * xtx_inv).lpNorm<Eigen::Infinity>() < 1e-10);

    // Residual orthogonality to every column.
    CHECK((m.transpose() * resid).lpNorm<Eigen::Infinity>() < 1e-8 * 50);
}

TEST_CASE("ols rejects rank-deficient designs") {
    Eigen::MatrixXd m(5, 2);
    m.col(0).setOnes();
    m.col(1).setOnes();
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
    CHECK_THROWS_AS(ols_fit(make_design(m), y), RankDeficient);
}

TEST_CASE("wls with unit weights reproduces ols points") {
    std::mt19937_64 rng(102);
    const Eigen::MatrixXd m = random_matrix(rng, 60, 3, true);
    const Eigen::VectorXd y = random_vector(rng, 60);
    const FitResult a = ols_fit(make_design(m), y);
    const FitResult b = wls_sandwich_fit(make_design(m), y, Eigen::VectorXd::Ones(60));
    CHECK((a.coefficients - b.coefficients).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("wls points match row duplication for weight two") {
    std::mt19937_64 rng(103);
    const Eigen::MatrixXd m = random_matrix(rng, 30, 2, true);
    const Eigen::VectorXd y = random_vector(rng, 30);
    const FitResult weighted =
        wls_sandwich_fit(make_design(m), y, Eigen::VectorXd::Constant(30, 2.0));

    Eigen::MatrixXd m2(60, 2);
    m2 << m, m;
    Eigen::VectorXd y2(60);
    y2 << y, y;
    const FitResult doubled = ols_fit(make_design(m2), y2);
    CHECK((weighted.coefficients - doubled.coefficients).lpNorm<Eigen::Infinity>() <
          1e-10);
}

TEST_CASE("wls sandwich covariance matches brute-force meat and bread") {
    std::mt19937_64 rng(104);
    const Eigen::Index n = 100;
    const Eigen::MatrixXd m = random_matrix(rng, n, 2, true);
    const Eigen::VectorXd y = random_vector(rng, n);
    Eigen::VectorXd w(n);
    std::uniform_real_distribution<double> unif(0.5, 3.0);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = unif(rng);

    const FitResult fit = wls_sandwich_fit(make_design(m), y, w);

    // Brute force, one observation at a time.
    Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(2, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        bread += w[i] * m.row(i).transpose() * m.row(i);
    }
    const Eigen::MatrixXd bread_inv = bread.fullPivLu().inverse();
    Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(2);
    for (Eigen::Index i = 0; i < n; ++i) {
        xtwy += w[i] * y[i] * m.row(i).transpose();
    }
    const Eigen::VectorXd beta = bread_inv * xtwy;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = y[i] - m.row(i).dot(beta);
        meat += w[i] * w[i] * e * e * m.row(i).transpose() * m.row(i);
    }
    const Eigen::MatrixXd cov =
        bread_inv * meat * bread_inv * (static_cast<double>(n) / (n - 2.0));
    CHECK((fit.coefficients - beta).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((fit.covariance - cov).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("wls rejects non-positive weights") {
    Eigen::MatrixXd m(4, 1);
    m.setOnes();
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, 0.0, 1.0);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    w[2] = 0.0;
    CHECK_THROWS_AS(wls_sandwich_fit(make_design(m), y, w), NonPositiveWeight);
}

TEST_CASE("logit saturated fit reproduces cell proportions") {
    const Eigen::Index n = 16;
    Eigen::MatrixXd m(n, 2);
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int x = i < 8 ? 0 : 1;
        m(i, 0) = 1.0;
        m(i, 1) = x;
        // cell proportions 0.25 (x=0) and 0.75 (x=1)
        c[i] = x == 0 ? (i % 8 < 2 ? 1.0 : 0.0) : (i % 8 < 6 ? 1.0 : 0.0);
    }
    const LogitFit fit = logit_fit(make_design(m), c);
    CHECK(fit.converged);
    CHECK(fit.separation_cells.empty());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double target = m(i, 1) == 0.0 ? 0.25 : 0.75;
        CHECK(fit.fitted_probabilities[i] == doctest::Approx(target).epsilon(1e-8));
    }
}

TEST_CASE("logit records separated cells and drops their observations") {
    const Eigen::Index n = 20;
    Eigen::MatrixXd m(n, 2);
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int x = i < 10 ? 0 : 1;
        m(i, 0) = 1.0;
        m(i, 1) = x;
        c[i] = x == 1 ? 1.0 : (i % 2 == 0 ? 1.0 : 0.0);
    }
    const LogitFit fit = logit_fit(make_design(m), c);
    REQUIRE(fit.separation_cells.size() == 1);
    CHECK(fit.separation_cells[0].outcome == 1);
    CHECK(fit.dropped_indices.size() == 10);
    for (Eigen::Index i : fit.dropped_indices) {
        CHECK(m(i, 1) == 1.0);
        CHECK(fit.fitted_probabilities[i] == 1.0);
    }
    // the x=0 cell is still fit (intercept only after dropping)
    CHECK(fit.fitted_probabilities[0] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("logit matches an independent Newton likelihood oracle") {
    std::mt19937_64 rng(105);
    const Eigen::Index n = 200;
    Eigen::MatrixXd m(n, 2);
    Eigen::VectorXd c(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int x = unif(rng) < 0.5 ? 1 : 0;
        m(i, 0) = 1.0;
        m(i, 1) = x;
        const double p = 1.0 / (1.0 + std::exp(-(-0.4 + 0.9 * x)));
        c[i] = unif(rng) < p ? 1.0 : 0.0;
    }
    const LogitFit fit = logit_fit(make_design(m), c);
    REQUIRE(fit.converged);
    REQUIRE(fit.separation_cells.empty());

    // Oracle: damped Newton on the log-likelihood, coded separately and
    // started from a different point.
    Eigen::Vector2d beta(0.3, -0.2);
    for (int it = 0; it < 200; ++it) {
        Eigen::Vector2d grad = Eigen::Vector2d::Zero();
        Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Vector2d xi = m.row(i).transpose();
            const double p = 1.0 / (1.0 + std::exp(-xi.dot(beta)));
            grad += (c[i] - p) * xi;
            hess += p * (1.0 - p) * xi * xi.transpose();
        }
        const Eigen::Vector2d step = hess.fullPivLu().solve(grad);
        beta += 0.8 * step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-12) break;
    }
    CHECK(std::abs(fit.coefficients[0] - beta[0]) < 1e-6);
    CHECK(std::abs(fit.coefficients[1] - beta[1]) < 1e-6);
}

TEST_CASE("tsls equals the Wald ratio when exactly identified") {
    std::mt19937_64 rng(106);
    const Eigen::Index n = 300;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd z(n), c(n), y(n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        z[i] = i % 2;
        c[i] = unif(rng) < (z[i] == 1.0 ? 0.8 : 0.1) ? 1.0 : 0.0;
        y[i] = 0.3 + 0.9 * c[i] + gauss(rng);
    }
    const DesignMatrix endog = DesignMatrix::from_columns({{"c", c}});
    const DesignMatrix exog =
        DesignMatrix::from_columns({{"intercept", Eigen::VectorXd::Ones(n)}});
    const DesignMatrix instruments = DesignMatrix::from_columns({{"z", z}});
    const FitResult fit = tsls_fit(y, endog, exog, instruments);

    const double zbar = z.mean();
    const double cov_zy = ((z.array() - zbar) * (y.array() - y.mean())).sum();
    const double cov_zc = ((z.array() - zbar) * (c.array() - c.mean())).sum();
    CHECK(std::abs(fit.coefficients[0] - cov_zy / cov_zc) < 1e-10);
}

TEST_CASE("tsls with endogenous equal to instrument reduces to ols") {
    std::mt19937_64 rng(107);
    const Eigen::Index n = 80;
    const Eigen::MatrixXd cols = random_matrix(rng, n, 2, true);
    const Eigen::VectorXd x = random_vector(rng, n);
    const Eigen::VectorXd y = random_vector(rng, n);
    const DesignMatrix endog = DesignMatrix::from_columns({{"w", x}});
    const DesignMatrix exog = DesignMatrix::from_columns(
        {{"intercept", cols.col(0)}, {"x2", cols.col(1)}});
    const DesignMatrix instruments = DesignMatrix::from_columns({{"w_inst", x}});
    const FitResult iv = tsls_fit(y, endog, exog, instruments);

    Eigen::MatrixXd full(n, 3);
    full << x, cols;
    const FitResult ls = ols_fit(make_design(full), y);
    CHECK((iv.coefficients - ls.coefficients).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("tsls flags a collinear projected design") {
    const Eigen::Index n = 40;
    Eigen::VectorXd z(n), c(n), x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z[i] = i % 2;
        x[i] = (i / 2) % 2;
        c[i] = 1.0;  // full compliance: receipts sum to one everywhere
        y[i] = 0.1 * i;
    }
    const Eigen::VectorXd c0 = ((1.0 - z.array()) * c.array()).matrix();
    const Eigen::VectorXd c1 = (z.array() * c.array()).matrix();
    const DesignMatrix endog = DesignMatrix::from_columns({{"c0", c0}, {"c1", c1}});
    const DesignMatrix exog = DesignMatrix::from_columns(
        {{"intercept", Eigen::VectorXd::Ones(n)}, {"x", x}});
    const DesignMatrix instruments = DesignMatrix::from_columns(
        {{"z", z}, {"zx", (z.array() * x.array()).matrix()}});
    CHECK_THROWS_AS(tsls_fit(y, endog, exog, instruments), WeakOrCollinearInstruments);
}

TEST_CASE("gibbs vague prior matches ols and the no-data column keeps its prior") {
    std::mt19937_64 rng(108);
    const Eigen::Index n = 100;
    Eigen::MatrixXd m(n, 2);
    m.col(0).setOnes();
    m.col(1) = random_vector(rng, n);
    Eigen::VectorXd zero_col = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd m3(n, 3);
    m3 << m, zero_col;
    const Eigen::VectorXd y =
        (0.5 + 1.2 * m.col(1).array()).matrix() + random_vector(rng, n);

    ChainConfig cfg;
    cfg.iterations = 6000;
    cfg.burn_in = 1000;
    cfg.seed = 2024;
    std::vector<NormalPrior> priors = {NormalPrior{0.0, 1000.0},
                                       NormalPrior{0.0, 1000.0},
                                       NormalPrior{0.7, 0.2}};
    const PosteriorSummary post =
        gibbs_linear(y, make_design(m3), priors, InverseGammaPrior{}, cfg);
    const FitResult ls = ols_fit(make_design(m), y);
    CHECK(std::abs(post.params[0].mean - ls.coefficients[0]) <
          3.0 * post.params[0].mcse_mean + 1e-6);
    CHECK(std::abs(post.params[1].mean - ls.coefficients[1]) <
          3.0 * post.params[1].mcse_mean + 1e-6);
    // the all-zero column carries no information, so its posterior is its prior
    CHECK(std::abs(post.params[2].mean - 0.7) < 3.0 * post.params[2].mcse_mean + 0.01);
    CHECK(post.params[2].sd == doctest::Approx(0.2).epsilon(0.1));
    CHECK(post.kept_draws == 5000);
}

TEST_CASE("gibbs matches the conjugate closed form at pinned variance") {
    std::mt19937_64 rng(109);
    const Eigen::Index n = 120;
    Eigen::MatrixXd m(n, 1);
    m.col(0) = random_vector(rng, n);
    const Eigen::VectorXd y = (0.8 * m.col(0).array()).matrix() + random_vector(rng, n);

    const NormalPrior prior{0.2, 0.5};
    ChainConfig cfg;
    cfg.iterations = 20000;
    cfg.burn_in = 2000;
    cfg.seed = 7;
    // A very tight inverse-gamma prior pins sigma^2 at 1, so the normal-normal
    // closed form applies.
    const InverseGammaPrior pinned{1e6, 1e6};
    const PosteriorSummary post =
        gibbs_linear(y, make_design(m), {prior}, pinned, cfg);

    const double prec = m.col(0).squaredNorm() / 1.0 + 1.0 / (0.5 * 0.5);
    const double mean =
        (m.col(0).dot(y) / 1.0 + 0.2 / (0.5 * 0.5)) / prec;
    CHECK(std::abs(post.params[0].mean - mean) < 3.0 * post.params[0].mcse_mean + 1e-4);
    CHECK(post.params[0].sd ==
          doctest::Approx(std::sqrt(1.0 / prec)).epsilon(0.05));
}

TEST_CASE("gibbs is invariant to row order") {
    std::mt19937_64 rng(110);
    const Eigen::Index n = 50;
    Eigen::MatrixXd m(n, 2);
    m.col(0).setOnes();
    m.col(1) = random_vector(rng, n);
    const Eigen::VectorXd y = random_vector(rng, n);

    Eigen::MatrixXd m_rev = m.colwise().reverse();
    Eigen::VectorXd y_rev = y.reverse();

    ChainConfig cfg;
    cfg.iterations = 1500;
    cfg.burn_in = 500;
    cfg.seed = 55;
    std::vector<NormalPrior> priors(2);
    const GibbsDraws a = gibbs_linear_draws(y, make_design(m), priors,
                                            InverseGammaPrior{}, cfg);
    const GibbsDraws b = gibbs_linear_draws(y_rev, make_design(m_rev), priors,
                                            InverseGammaPrior{}, cfg);
    CHECK((a.coefficients - b.coefficients).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("stream derivation is deterministic and distinct") {
    auto a = derive_stream(42, 0).engine();
    auto b = derive_stream(42, 0).engine();
    for (int i = 0; i < 1000; ++i) {
        CHECK(a() == b());
    }
    auto c = derive_stream(42, 1).engine();
    auto d = derive_stream(42, 0).engine();
    int differing = 0;
    for (int i = 0; i < 1000; ++i) {
        if (c() != d()) ++differing;
    }
    CHECK(differing > 990);
}

TEST_CASE("no first-output collisions across ten thousand streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        auto eng = derive_stream(42, i).engine();
        seen.insert(eng());
    }
    CHECK(seen.size() == 10000);
}
