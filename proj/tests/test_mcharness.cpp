#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nitrial/errors.hpp"
#include "nitrial/mcharness.hpp"

using namespace nitrial;

namespace {

CellResult make_cell(const std::string& name, double point, double se, bool ni) {
    CellResult cell;
    cell.estimator = name;
    EstimateResult e;
    e.estimator = name;
    e.point = point;
    e.se = se;
    e.lower = point - 1.96 * se;
    e.upper = point + 1.96 * se;
    e.ni_declared = ni;
    cell.estimate = e;
    return cell;
}

ReplicationRow make_row(int rep, double itt_se, double iv_se) {
    ReplicationRow row;
    row.scenario = "fixture";
    row.replication = rep;
    row.cells.push_back(make_cell("itt", -0.3, itt_se, true));
    row.cells.push_back(make_cell("iv_interaction", -0.3, iv_se, true));
    return row;
}

}  // namespace

TEST_CASE("estimator ids round-trip and reject unknown names") {
    for (const std::string& name : valid_estimator_ids()) {
        CHECK(estimator_id_name(parse_estimator_id(name)) == name);
    }
    CHECK(valid_estimator_ids().size() == 5);
    try {
        parse_estimator_id("ivregress");
        CHECK(false);
    } catch (const ConfigInvalid& e) {
        const std::string msg = e.what();
        // the message enumerates the accepted identifiers
        for (const std::string& name : valid_estimator_ids()) {
            CHECK(msg.find(name) != std::string::npos);
        }
    }
}

TEST_CASE("iv outlier filter keeps the 10x boundary and flags beyond it") {
    std::vector<ReplicationRow> rows;
    rows.push_back(make_row(0, 0.1, 1.0));     // exactly 10x: kept
    rows.push_back(make_row(1, 0.1, 1.001));   // just over: filtered
    rows.push_back(make_row(2, 0.1, 0.5));     // well under: kept
    filter_iv_outliers(rows);
    CHECK_FALSE(rows[0].cells[1].filtered);
    CHECK(rows[1].cells[1].filtered);
    CHECK_FALSE(rows[2].cells[1].filtered);
    // the companion itt cells are never touched
    for (const ReplicationRow& r : rows) CHECK_FALSE(r.cells[0].filtered);
}

TEST_CASE("iv outlier filter needs a usable itt companion") {
    std::vector<ReplicationRow> rows;
    ReplicationRow row;
    row.scenario = "fixture";
    CellResult broken;
    broken.estimator = "itt";
    broken.error = "RankDeficient";
    row.cells.push_back(broken);
    row.cells.push_back(make_cell("iv_interaction", -0.3, 1.0, true));
    rows.push_back(row);
    CHECK_THROWS_AS(filter_iv_outliers(rows), MissingReference);
}

TEST_CASE("two-point summary matches hand-computed metrics") {
    GroundTruth truth;
    truth.estimand = -0.3;
    NiRule rule;

    std::vector<ReplicationRow> rows;
    ReplicationRow a;
    a.scenario = "fixture";
    a.replication = 0;
    a.cells.push_back(make_cell("itt", -0.2, 0.2, true));
    ReplicationRow b;
    b.scenario = "fixture";
    b.replication = 1;
    b.cells.push_back(make_cell("itt", -0.4, 0.1, false));
    rows.push_back(a);
    rows.push_back(b);

    const auto summaries = summarize(rows, truth, rule);
    const MetricsSummary& s = summaries.at("itt");
    CHECK(s.nsim_used == 2);
    CHECK(s.failed == 0);
    CHECK(s.bias == doctest::Approx(0.0).epsilon(1e-14));
    // sample sd of {-0.2, -0.4} is 0.1 * sqrt(2)
    CHECK(s.empirical_se == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(s.bias_mcse == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s.mean_model_se == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(s.ni_rate == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.ni_rate_mcse == doctest::Approx(std::sqrt(0.25 / 2.0)).epsilon(1e-12));
}

TEST_CASE("precision loss is quadratic in the empirical-se ratio") {
    GroundTruth truth;
    truth.estimand = 0.0;
    NiRule rule;

    // itt points {-1, 1}; wide points {-2, 2}: twice the spread means a
    // 300 percent precision loss.
    std::vector<ReplicationRow> rows;
    for (int r = 0; r < 2; ++r) {
        ReplicationRow row;
        row.scenario = "fixture";
        row.replication = r;
        const double sign = r == 0 ? -1.0 : 1.0;
        row.cells.push_back(make_cell("itt", sign, 1.0, false));
        row.cells.push_back(make_cell("pp", 2.0 * sign, 1.0, false));
        rows.push_back(row);
    }
    const auto summaries = summarize(rows, truth, rule);
    CHECK(summaries.at("itt").precision_vs_itt == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(summaries.at("pp").precision_vs_itt == doctest::Approx(300.0).epsilon(1e-10));
}

TEST_CASE("summary agrees with an independent aggregation pass") {
    // Random fixture rows, then every metric recomputed from scratch here.
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, 0.15);
    std::uniform_real_distribution<double> sedist(0.05, 0.4);

    GroundTruth truth;
    truth.estimand = -0.3;
    NiRule rule;

    const int nsim = 400;
    std::vector<ReplicationRow> rows;
    std::vector<double> points, ses;
    int nni = 0, nfail = 0, nfilt = 0, ndroppos = 0;
    double dropsum = 0.0;
    for (int r = 0; r < nsim; ++r) {
        ReplicationRow row;
        row.scenario = "fixture";
        row.replication = r;
        if (r % 17 == 0) {
            CellResult cell;
            cell.estimator = "ipw";
            cell.error = "RankDeficient";
            row.cells.push_back(cell);
            ++nfail;
        } else if (r % 23 == 0) {
            CellResult cell = make_cell("ipw", -0.3, 0.2, true);
            cell.filtered = true;
            row.cells.push_back(cell);
            ++nfilt;
        } else {
            const double point = -0.3 + noise(rng);
            const double se = sedist(rng);
            const bool ni = point - se * 1.959963984540054 > rule.margin;
            CellResult cell = make_cell("ipw", point, se, ni);
            cell.estimate->dropped = r % 29 == 0 ? 3 : 0;
            row.cells.push_back(cell);
            points.push_back(point);
            ses.push_back(se);
            if (ni) ++nni;
            if (r % 29 == 0) ++ndroppos;
            dropsum += cell.estimate->dropped;
        }
        rows.push_back(row);
    }

    const auto summaries = summarize(rows, truth, rule);
    const MetricsSummary& s = summaries.at("ipw");
    const int used = static_cast<int>(points.size());
    CHECK(s.nsim_used == used);
    CHECK(s.failed == nfail);
    CHECK(s.filtered == nfilt);
    CHECK(s.nsim_used + s.failed + s.filtered == nsim);

    double psum = 0.0;
    for (double p : points) psum += p;
    const double pmean = psum / used;
    double ss = 0.0;
    for (double p : points) ss += (p - pmean) * (p - pmean);
    const double empse = std::sqrt(ss / (used - 1));
    double sesum = 0.0;
    for (double v : ses) sesum += v;

    CHECK(s.bias == doctest::Approx(pmean - truth.estimand).epsilon(1e-12));
    CHECK(s.empirical_se == doctest::Approx(empse).epsilon(1e-12));
    CHECK(s.bias_mcse == doctest::Approx(empse / std::sqrt(static_cast<double>(used)))
                             .epsilon(1e-12));
    CHECK(s.mean_model_se == doctest::Approx(sesum / used).epsilon(1e-12));
    CHECK(s.relative_se_error ==
          doctest::Approx(100.0 * (sesum / used / empse - 1.0)).epsilon(1e-10));
    const double ni_rate = static_cast<double>(nni) / used;
    CHECK(s.ni_rate == doctest::Approx(ni_rate).epsilon(1e-12));
    CHECK(s.ni_rate_mcse ==
          doctest::Approx(std::sqrt(ni_rate * (1.0 - ni_rate) / used)).epsilon(1e-12));
    CHECK(s.ipw_dropped_rate ==
          doctest::Approx(static_cast<double>(ndroppos) / used).epsilon(1e-12));
    CHECK(s.mean_dropped == doctest::Approx(dropsum / used).epsilon(1e-12));
}

TEST_CASE("summarize rejects a lone usable replication") {
    GroundTruth truth;
    NiRule rule;
    std::vector<ReplicationRow> rows;
    ReplicationRow row;
    row.scenario = "fixture";
    row.cells.push_back(make_cell("itt", -0.3, 0.1, true));
    rows.push_back(row);
    CHECK_THROWS_AS(summarize(rows, truth, rule), InsufficientRows);
}

TEST_CASE("run_replication runs each configured estimator once") {
    const ScenarioSpec spec = catalog_sim1("A-2a");
    NiRule rule;
    std::vector<EstimatorSpec> estimators;
    estimators.push_back({EstimatorId::itt});

    const SeedStream stream = derive_stream(11, 3);
    const ReplicationRow row = run_replication(spec, estimators, rule, stream);
    REQUIRE(row.cells.size() == 1);
    CHECK(row.cells[0].estimator == "itt");
    REQUIRE(row.cells[0].estimate.has_value());
    CHECK(row.cells[0].error.empty());
    CHECK(row.seed_index == 3);

    // bit-identical on replay
    const ReplicationRow again = run_replication(spec, estimators, rule, stream);
    CHECK(again.cells[0].estimate->point == row.cells[0].estimate->point);
    CHECK(again.cells[0].estimate->se == row.cells[0].estimate->se);
    CHECK(again.dataset_checksum == row.dataset_checksum);
}

TEST_CASE("run_replication keeps one dataset across estimator sets") {
    const ScenarioSpec spec = catalog_sim1("B-3a");
    NiRule rule;
    const SeedStream stream = derive_stream(21, 5);

    std::vector<EstimatorSpec> just_itt{{EstimatorId::itt}};
    std::vector<EstimatorSpec> several{
        {EstimatorId::itt}, {EstimatorId::pp}, {EstimatorId::ipw}};
    const ReplicationRow a = run_replication(spec, just_itt, rule, stream);
    const ReplicationRow b = run_replication(spec, several, rule, stream);
    CHECK(a.dataset_checksum == b.dataset_checksum);
    CHECK(a.cells[0].estimate->point == b.cells[0].estimate->point);
    CHECK(b.cells.size() == 3);
}

TEST_CASE("run_replication records estimator failures without aborting") {
    // Force full compliance so the interaction IV degenerates.
    ScenarioSpec spec = catalog_sim1("A-1");
    spec.gamma0 = 30.0;
    NiRule rule;
    std::vector<EstimatorSpec> estimators{
        {EstimatorId::itt}, {EstimatorId::iv_interaction}};
    const ReplicationRow row =
        run_replication(spec, estimators, rule, derive_stream(7, 0));
    CHECK(row.cells[0].estimate.has_value());
    CHECK_FALSE(row.cells[1].estimate.has_value());
    CHECK_FALSE(row.cells[1].error.empty());
}

TEST_CASE("study output is invariant to the thread budget") {
    StudyConfig cfg;
    cfg.scenario_ids = {"B-1", "B-2a"};
    cfg.estimators.push_back({EstimatorId::itt});
    cfg.estimators.push_back({EstimatorId::ipw});
    EstimatorSpec bayes;
    bayes.id = EstimatorId::iv_bayes;
    bayes.prior_label = "centred";
    bayes.prior = {1.0, 0.05, 1000.0};
    cfg.estimators.push_back(bayes);
    cfg.nsim = 12;
    cfg.master_seed = 4242;
    cfg.chain = {1000, 200};

    cfg.threads = 1;
    const StudyResult serial = run_study(cfg);
    cfg.threads = 8;
    const StudyResult parallel = run_study(cfg);
    CHECK(results_csv(serial) == results_csv(parallel));
    CHECK(summary_json(serial, cfg) == summary_json(parallel, cfg));
}

TEST_CASE("study accounting is exact per estimator") {
    StudyConfig cfg;
    cfg.scenario_ids = {"B-2a"};
    cfg.estimators.push_back({EstimatorId::itt});
    cfg.estimators.push_back({EstimatorId::iv_interaction});
    cfg.nsim = 40;
    cfg.master_seed = 17;
    const StudyResult res = run_study(cfg);
    REQUIRE(res.scenarios.size() == 1);
    for (const auto& [name, s] : res.scenarios[0].summaries) {
        CHECK(s.nsim_used + s.failed + s.filtered == cfg.nsim);
    }
    CHECK(static_cast<int>(res.scenarios[0].rows.size()) == cfg.nsim);
}

TEST_CASE("results csv has one line per scenario, replication and estimator") {
    StudyConfig cfg;
    cfg.scenario_ids = {"B-1"};
    cfg.estimators.push_back({EstimatorId::itt});
    cfg.nsim = 2;
    const StudyResult res = run_study(cfg);
    const std::string csv = results_csv(res);
    const auto lines = static_cast<int>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 3);  // header plus 1 scenario x 2 reps x 1 estimator
    CHECK(csv.rfind("scenario,", 0) == 0);
}

TEST_CASE("study config validation") {
    StudyConfig cfg;
    cfg.scenario_ids = {"A-1"};
    cfg.estimators.push_back({EstimatorId::itt});
    cfg.nsim = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    cfg.nsim = 10;
    cfg.threads = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    cfg.threads = 1;
    CHECK_NOTHROW(cfg.validate());
    cfg.estimators.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
}
