#include "nitrial/mcharness.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "nitrial/csv.hpp"
#include "nitrial/errors.hpp"
#include "nitrial/stats.hpp"

namespace nitrial {

std::string estimator_id_name(EstimatorId id) {
    switch (id) {
        case EstimatorId::itt: return "itt";
        case EstimatorId::pp: return "pp";
        case EstimatorId::ipw: return "ipw";
        case EstimatorId::iv_interaction: return "iv_interaction";
        case EstimatorId::iv_bayes: return "iv_bayes";
    }
    throw ConfigInvalid("unhandled estimator id");
}

std::vector<std::string> valid_estimator_ids() {
    return {"itt", "pp", "ipw", "iv_interaction", "iv_bayes"};
}

EstimatorId parse_estimator_id(const std::string& name) {
    if (name == "itt") return EstimatorId::itt;
    if (name == "pp") return EstimatorId::pp;
    if (name == "ipw") return EstimatorId::ipw;
    if (name == "iv_interaction") return EstimatorId::iv_interaction;
    if (name == "iv_bayes") return EstimatorId::iv_bayes;
    std::string msg = "unknown estimator \"" + name + "\"; valid ids:";
    for (const std::string& id : valid_estimator_ids()) msg += " " + id;
    throw ConfigInvalid(msg);
}

std::string EstimatorSpec::column_label() const {
    std::string label = estimator_id_name(id);
    if (id == EstimatorId::iv_bayes && !prior_label.empty()) {
        label += ":" + prior_label;
    }
    return label;
}

namespace {

std::uint64_t fnv_accumulate(std::uint64_t h, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &v[i], sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::uint64_t dataset_checksum(const TrialDataset& d) {
    std::uint64_t h = 14695981039346656037ULL;
    h = fnv_accumulate(h, d.y);
    h = fnv_accumulate(h, d.z);
    h = fnv_accumulate(h, d.c);
    h = fnv_accumulate(h, d.x);
    return h;
}

bool is_iv_interaction(const std::string& label) {
    return label.rfind("iv_interaction", 0) == 0;
}

}  // namespace

ReplicationRow run_replication(const ScenarioSpec& spec,
                               const std::vector<EstimatorSpec>& estimators,
                               const NiRule& rule, const SeedStream& stream,
                               const ChainSettings& chain) {
    if (estimators.empty()) {
        throw ConfigInvalid("at least one estimator must be configured");
    }
    const TrialDataset d = sample_dataset(spec, stream);

    ReplicationRow row;
    row.scenario = spec.label;
    row.seed_index = stream.index;
    row.dataset_checksum = dataset_checksum(d);
    row.cells.reserve(estimators.size());
    for (std::size_t j = 0; j < estimators.size(); ++j) {
        const EstimatorSpec& es = estimators[j];
        CellResult cell;
        cell.estimator = es.column_label();
        try {
            switch (es.id) {
                case EstimatorId::itt:
                    cell.estimate = estimate_itt(d, rule);
                    break;
                case EstimatorId::pp:
                    cell.estimate = estimate_pp(d, rule);
                    break;
                case EstimatorId::ipw:
                    cell.estimate = estimate_ipw(d, rule, es.ipw);
                    break;
                case EstimatorId::iv_interaction:
                    cell.estimate = estimate_iv_interaction(d, rule);
                    break;
                case EstimatorId::iv_bayes: {
                    // Chain seeds are salted per column so they can never
                    // collide with a dataset stream or another chain.
                    ChainConfig cfg;
                    cfg.iterations = chain.iterations;
                    cfg.burn_in = chain.burn_in;
                    cfg.seed = derive_seed(stream.master, stream.index,
                                           1000 + static_cast<std::uint64_t>(j));
                    cell.estimate = estimate_iv_bayes(d, es.prior, cfg, rule);
                    break;
                }
            }
            cell.estimate->estimator = cell.estimator;
        } catch (const Error& e) {
            cell.error = e.what();
        }
        row.cells.push_back(std::move(cell));
    }
    return row;
}

void filter_iv_outliers(std::vector<ReplicationRow>& rows) {
    for (ReplicationRow& row : rows) {
        const EstimateResult* itt = nullptr;
        for (const CellResult& cell : row.cells) {
            if (cell.estimator == "itt" && cell.estimate) {
                itt = &*cell.estimate;
                break;
            }
        }
        for (CellResult& cell : row.cells) {
            if (!is_iv_interaction(cell.estimator) || !cell.estimate) continue;
            if (itt == nullptr) {
                throw MissingReference(
                    "filter_iv_outliers needs a usable itt estimate in every row");
            }
            cell.filtered = cell.estimate->se > 10.0 * itt->se;
        }
    }
}

std::map<std::string, MetricsSummary> summarize(const std::vector<ReplicationRow>& rows,
                                                const GroundTruth& truth,
                                                const NiRule& rule) {
    rule.validate();
    struct Bucket {
        std::vector<double> points;
        std::vector<double> ses;
        int ni = 0;
        int failed = 0;
        int filtered = 0;
        int with_drops = 0;
        double dropped_total = 0.0;
    };
    std::map<std::string, Bucket> buckets;
    for (const ReplicationRow& row : rows) {
        for (const CellResult& cell : row.cells) {
            Bucket& b = buckets[cell.estimator];
            if (!cell.estimate) {
                ++b.failed;
                continue;
            }
            if (cell.filtered) {
                ++b.filtered;
                continue;
            }
            b.points.push_back(cell.estimate->point);
            b.ses.push_back(cell.estimate->se);
            if (cell.estimate->ni_declared) ++b.ni;
            if (cell.estimate->dropped > 0) ++b.with_drops;
            b.dropped_total += static_cast<double>(cell.estimate->dropped);
        }
    }

    std::map<std::string, MetricsSummary> out;
    for (const auto& [label, b] : buckets) {
        const int nu = static_cast<int>(b.points.size());
        if (nu == 1) {
            throw InsufficientRows("estimator \"" + label +
                                   "\" has fewer than 2 usable replications");
        }
        MetricsSummary m;
        m.estimator = label;
        m.nsim_used = nu;
        m.failed = b.failed;
        m.filtered = b.filtered;
        if (nu >= 2) {
            const Eigen::VectorXd pts =
                Eigen::Map<const Eigen::VectorXd>(b.points.data(), nu);
            const Eigen::VectorXd ses =
                Eigen::Map<const Eigen::VectorXd>(b.ses.data(), nu);
            m.bias = mean(pts) - truth.estimand;
            m.empirical_se = sample_sd(pts);
            m.bias_mcse = m.empirical_se / std::sqrt(static_cast<double>(nu));
            m.mean_model_se = mean(ses);
            m.relative_se_error =
                m.empirical_se > 0.0
                    ? 100.0 * (m.mean_model_se / m.empirical_se - 1.0)
                    : 0.0;
            const double p = static_cast<double>(b.ni) / static_cast<double>(nu);
            m.ni_rate = p;
            m.ni_rate_mcse = std::sqrt(p * (1.0 - p) / static_cast<double>(nu));
            m.ipw_dropped_rate =
                static_cast<double>(b.with_drops) / static_cast<double>(nu);
            m.mean_dropped = b.dropped_total / static_cast<double>(nu);
        }
        out.emplace(label, std::move(m));
    }

    const auto itt_it = out.find("itt");
    if (itt_it != out.end() && itt_it->second.empirical_se > 0.0) {
        const double ref = itt_it->second.empirical_se;
        for (auto& [label, m] : out) {
            if (m.nsim_used >= 2) {
                const double ratio = m.empirical_se / ref;
                m.precision_vs_itt = 100.0 * (ratio * ratio - 1.0);
            }
        }
    }
    return out;
}

void StudyConfig::validate() const {
    if (nsim < 2) {
        throw ConfigInvalid("nsim must be at least 2");
    }
    if (scenario_ids.empty()) {
        throw ConfigInvalid("at least one scenario id is required");
    }
    if (estimators.empty()) {
        throw ConfigInvalid("at least one estimator must be configured");
    }
    if (threads < 0) {
        throw ConfigInvalid("thread budget cannot be negative");
    }
    rule.validate();
    ChainConfig probe;
    probe.iterations = chain.iterations;
    probe.burn_in = chain.burn_in;
    probe.validate();
    std::set<std::string> labels;
    for (const EstimatorSpec& es : estimators) {
        if (es.id == EstimatorId::iv_bayes) es.prior.validate();
        if (!labels.insert(es.column_label()).second) {
            throw ConfigInvalid("duplicate estimator column \"" + es.column_label() +
                                "\" (give iv_bayes priors distinct labels)");
        }
    }
    std::set<std::string> ids(scenario_ids.begin(), scenario_ids.end());
    if (ids.size() != scenario_ids.size()) {
        throw ConfigInvalid("scenario ids must be unique");
    }
    for (const std::string& id : scenario_ids) {
        catalog_scenario(id);  // throws UnknownScenario
    }
}

StudyResult run_study(const StudyConfig& cfg) {
    cfg.validate();
    const std::size_t nscen = cfg.scenario_ids.size();
    const std::size_t nsim = static_cast<std::size_t>(cfg.nsim);

    StudyResult result;
    result.scenarios.resize(nscen);
    for (std::size_t s = 0; s < nscen; ++s) {
        result.scenarios[s].spec = catalog_scenario(cfg.scenario_ids[s]);
        result.scenarios[s].truth = true_estimand(result.scenarios[s].spec);
        result.scenarios[s].rows.resize(nsim);
    }

    unsigned budget = cfg.threads == 0 ? std::thread::hardware_concurrency()
                                       : static_cast<unsigned>(cfg.threads);
    if (budget == 0) budget = 1;
    const std::size_t total = nscen * nsim;
    budget = static_cast<unsigned>(
        std::min<std::size_t>(budget, total));

    // Each task owns one (scenario, replication) slot; claiming tasks off a
    // shared counter keeps the schedule irrelevant to the output.
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= total) return;
            const std::size_t s = t / nsim;
            const std::size_t r = t % nsim;
            try {
                const SeedStream stream = derive_stream(
                    cfg.master_seed, static_cast<std::uint64_t>(s * nsim + r));
                ReplicationRow row = run_replication(
                    result.scenarios[s].spec, cfg.estimators, cfg.rule, stream,
                    cfg.chain);
                row.replication = static_cast<int>(r);
                result.scenarios[s].rows[r] = std::move(row);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(total);
                return;
            }
        }
    };
    if (budget <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(budget);
        for (unsigned i = 0; i < budget; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    bool has_iv = false;
    bool has_itt = false;
    for (const EstimatorSpec& es : cfg.estimators) {
        has_iv = has_iv || es.id == EstimatorId::iv_interaction;
        has_itt = has_itt || es.id == EstimatorId::itt;
    }
    for (ScenarioResult& sr : result.scenarios) {
        if (has_iv && has_itt) {
            filter_iv_outliers(sr.rows);
        }
        sr.summaries = summarize(sr.rows, sr.truth, cfg.rule);
    }
    return result;
}

std::string results_csv(const StudyResult& result) {
    std::string out =
        "scenario,rep,estimator,point,se,lower,upper,ni,dropped,filtered,failed,"
        "seed,format_version\n";
    for (const ScenarioResult& sr : result.scenarios) {
        for (const ReplicationRow& row : sr.rows) {
            for (const CellResult& cell : row.cells) {
                out += row.scenario;
                out += ',' + std::to_string(row.replication);
                out += ',' + cell.estimator;
                if (cell.estimate) {
                    out += ',' + format_double(cell.estimate->point);
                    out += ',' + format_double(cell.estimate->se);
                    out += ',' + format_double(cell.estimate->lower);
                    out += ',' + format_double(cell.estimate->upper);
                    out += cell.estimate->ni_declared ? ",1" : ",0";
                    out += ',' + std::to_string(cell.estimate->dropped);
                } else {
                    out += ",,,,,,";
                }
                out += cell.filtered ? ",1" : ",0";
                out += cell.estimate ? ",0" : ",1";
                out += ',' + std::to_string(row.seed_index);
                out += ",1\n";
            }
        }
    }
    return out;
}

std::string summary_json(const StudyResult& result, const StudyConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["format_version"] = 1;
    nlohmann::ordered_json config;
    config["nsim"] = cfg.nsim;
    config["master_seed"] = cfg.master_seed;
    config["margin"] = cfg.rule.margin;
    config["alpha"] = cfg.rule.alpha;
    config["chain_iterations"] = cfg.chain.iterations;
    config["chain_burn_in"] = cfg.chain.burn_in;
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const EstimatorSpec& es : cfg.estimators) cols.push_back(es.column_label());
    config["estimators"] = cols;
    doc["config"] = config;
    doc["catalog_hash"] = catalog_hash();

    nlohmann::ordered_json scenarios;
    for (const ScenarioResult& sr : result.scenarios) {
        nlohmann::ordered_json entry;
        entry["truth"] = {{"estimand", sr.truth.estimand},
                          {"compliance_rate0", sr.truth.compliance_rate0},
                          {"compliance_rate1", sr.truth.compliance_rate1}};
        nlohmann::ordered_json ests;
        for (const auto& [label, m] : sr.summaries) {
            nlohmann::ordered_json ms;
            ms["nsim_used"] = m.nsim_used;
            ms["failed"] = m.failed;
            ms["filtered"] = m.filtered;
            ms["bias"] = m.bias;
            ms["bias_mcse"] = m.bias_mcse;
            ms["empirical_se"] = m.empirical_se;
            ms["mean_model_se"] = m.mean_model_se;
            ms["relative_se_error"] = m.relative_se_error;
            ms["ni_rate"] = m.ni_rate;
            ms["ni_rate_mcse"] = m.ni_rate_mcse;
            ms["precision_vs_itt"] = m.precision_vs_itt;
            ms["ipw_dropped_rate"] = m.ipw_dropped_rate;
            ms["mean_dropped"] = m.mean_dropped;
            ests[label] = ms;
        }
        entry["estimators"] = ests;
        scenarios[sr.spec.label] = entry;
    }
    doc["scenarios"] = scenarios;
    return doc.dump(2) + "\n";
}

}  // namespace nitrial
