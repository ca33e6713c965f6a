#include "nitrial/dgp.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "nitrial/errors.hpp"

namespace nitrial {

namespace {

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Analytic average compliance in one arm over the four (x, u) cells.
double arm_rate(const ScenarioSpec& s, int z) {
    double rate = 0.0;
    for (int x = 0; x <= 1; ++x) {
        for (int u = 0; u <= 1; ++u) {
            const double px = x == 1 ? s.p_x : 1.0 - s.p_x;
            const double pu = u == 1 ? s.p_u : 1.0 - s.p_u;
            rate += px * pu * s.compliance_prob(z, x, u);
        }
    }
    return rate;
}

// Solve gamma0 so the mean of the two analytic arm compliance rates hits
// the target. The map is strictly increasing, so bisection is exact to the
// last bit after a fixed iteration budget.
double solve_gamma0(ScenarioSpec s, double target) {
    double lo = -10.0;
    double hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        s.gamma0 = mid;
        const double avg = 0.5 * (arm_rate(s, 0) + arm_rate(s, 1));
        if (avg < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 0.0) break;
    }
    return 0.5 * (lo + hi);
}

struct Sim1Letter {
    Eigen::Index n;
    double compliance_target;
    double delta1;
    double beta_xu;
    double boost;  // gamma_z lift for the "higher compliance on new" codes
};

Sim1Letter sim1_letter(char letter) {
    switch (letter) {
        case 'A': return {1000, 0.70, 0.7, 0.5, 0.8};
        case 'B': return {200, 0.70, 0.7, 0.5, 0.8};
        case 'C': return {1000, 0.925, 0.7, 0.5, 2.5};
        case 'D': return {1000, 0.70, 1.0, 0.5, 0.8};
        case 'E': return {1000, 0.70, 0.7, 0.25, 0.8};
        default: throw UnknownScenario("unknown study-1 scenario letter");
    }
}

// Compliance-mechanism coefficient scales. The X effect is kept small so
// the interaction instrument stays informative without inflating the IV
// sampling error; the U effect is large enough to make unmeasured
// confounding bite.
constexpr double kGammaX = 0.15;
constexpr double kGammaU = 1.5;

void apply_sim1_code(ScenarioSpec& s, const std::string& code, double boost) {
    const double gx = kGammaX;
    const double gu = kGammaU;
    if (code == "1") {
        // compliance independent of everything
    } else if (code == "2a") {
        s.gamma_x = -gx;
        s.gamma_z = boost;
    } else if (code == "2b") {
        s.gamma_x = -gx;
        s.gamma_zx = 2.0 * gx;
        s.gamma_z = -gx;  // equal arm compliance by cell permutation
    } else if (code == "2c") {
        s.gamma_x = -gx;
        s.gamma_zx = 2.0 * gx;
        s.gamma_z = -gx + boost;
    } else if (code == "3a") {
        s.gamma_x = -gx;
        s.gamma_u = -gu;
        s.gamma_z = boost;
    } else if (code == "3b") {
        s.gamma_x = -gx;
        s.gamma_zx = 2.0 * gx;
        s.gamma_u = -gu;
        s.gamma_zu = 2.0 * gu;
        s.gamma_z = -gx - gu;
    } else if (code == "4a") {
        s.gamma_u = -gu;
        s.gamma_z = boost;
    } else if (code == "4b") {
        s.gamma_u = -gu;
        s.gamma_zu = 2.0 * gu;
        s.gamma_z = -gu;
    } else {
        throw UnknownScenario("unknown study-1 compliance code");
    }
}

}  // namespace

void ScenarioSpec::validate() const {
    if (n < 20 || n % 2 != 0) {
        throw ImproperInput("scenario n must be an even count of at least 20");
    }
    if (!(p_x > 0.0) || !(p_x < 1.0) || !(p_u > 0.0) || !(p_u < 1.0)) {
        throw ImproperInput("covariate probabilities must lie in (0, 1)");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ImproperInput("outcome noise sd must be positive");
    }
    const double coefs[] = {gamma0, gamma_z, gamma_x,  gamma_u, gamma_zx, gamma_zu,
                            beta0,  delta0,  delta1,   beta_x,  beta_u,   tau_x,
                            tau_u};
    for (double v : coefs) {
        if (!std::isfinite(v)) {
            throw ImproperInput("scenario coefficients must be finite");
        }
    }
}

double ScenarioSpec::compliance_prob(int z, int x, int u) const {
    return expit(gamma0 + gamma_z * z + gamma_x * x + gamma_u * u +
                 gamma_zx * z * x + gamma_zu * z * u);
}

GroundTruth true_estimand(const ScenarioSpec& spec) {
    spec.validate();
    GroundTruth t;
    t.estimand = spec.delta1 - spec.delta0 + spec.tau_x * spec.p_x + spec.tau_u * spec.p_u;
    for (int z = 0; z <= 1; ++z) {
        for (int x = 0; x <= 1; ++x) {
            for (int u = 0; u <= 1; ++u) {
                t.cell_prob[z][x][u] = spec.compliance_prob(z, x, u);
            }
        }
    }
    t.compliance_rate0 = arm_rate(spec, 0);
    t.compliance_rate1 = arm_rate(spec, 1);
    return t;
}

TrialDataset sample_dataset(const ScenarioSpec& spec, const SeedStream& stream) {
    spec.validate();
    std::mt19937_64 rng = stream.engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.sigma);

    TrialDataset d;
    d.y.resize(spec.n);
    d.z.resize(spec.n);
    d.c.resize(spec.n);
    d.x.resize(spec.n);
    d.u.emplace(spec.n);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        const int z = unif(rng) < 0.5 ? 1 : 0;
        const int x = unif(rng) < spec.p_x ? 1 : 0;
        const int u = unif(rng) < spec.p_u ? 1 : 0;
        const int c = unif(rng) < spec.compliance_prob(z, x, u) ? 1 : 0;
        double y = spec.beta0 + spec.beta_x * x + spec.beta_u * u + noise(rng);
        if (c == 1) {
            y += z == 0 ? spec.delta0
                        : spec.delta1 + spec.tau_x * x + spec.tau_u * u;
        }
        d.y[i] = y;
        d.z[i] = z;
        d.c[i] = c;
        d.x[i] = x;
        (*d.u)[i] = u;
    }
    return d;
}

ScenarioSpec catalog_sim1(const std::string& id) {
    const std::size_t dash = id.find('-');
    if (dash != 1 || id.size() < 3) {
        throw UnknownScenario("study-1 labels look like \"A-2b\": " + id);
    }
    const Sim1Letter letter = sim1_letter(id[0]);
    ScenarioSpec s;
    s.label = id;
    s.n = letter.n;
    s.delta0 = 1.0;
    s.delta1 = letter.delta1;
    s.beta_x = letter.beta_xu;
    s.beta_u = letter.beta_xu;
    apply_sim1_code(s, id.substr(2), letter.boost);
    s.gamma0 = solve_gamma0(s, letter.compliance_target);
    s.validate();
    return s;
}

ScenarioSpec catalog_sim2(const std::string& id) {
    if (id.size() != 4 || id.rfind("S2-", 0) != 0 || id[3] < '1' || id[3] > '8') {
        throw UnknownScenario("study-2 labels are \"S2-1\" .. \"S2-8\": " + id);
    }
    const int k = id[3] - '0';
    const int variant = (k - 1) % 4;
    const bool on_u = k > 4;
    const bool diff_large = variant == 1 || variant == 3;
    const bool teh_large = variant == 2 || variant == 3;
    const double tau = teh_large ? 0.8 : 0.3;
    const double boost = diff_large ? 1.5 : 0.5;

    ScenarioSpec s;
    s.label = id;
    s.n = 1000;
    s.delta0 = 1.0;
    s.beta_x = 0.5;
    s.beta_u = 0.5;
    // delta1 backs out so the estimand sits exactly on the -0.3 margin.
    s.delta1 = -0.3 + s.delta0 - tau / 2.0;
    if (on_u) {
        s.tau_u = tau;
        s.gamma_u = -1.0;
        s.gamma_zu = 2.0;
    } else {
        s.tau_x = tau;
        s.gamma_x = -1.0;
        s.gamma_zx = 2.0;
    }
    s.gamma_z = -1.0 - boost;
    s.gamma0 = solve_gamma0(s, 0.70);
    s.validate();
    return s;
}

ScenarioSpec catalog_scenario(const std::string& id) {
    if (id.rfind("S2-", 0) == 0) {
        return catalog_sim2(id);
    }
    return catalog_sim1(id);
}

std::vector<std::string> sim1_ids() {
    std::vector<std::string> out;
    for (char letter : {'A', 'B', 'C', 'D', 'E'}) {
        for (const char* code : {"1", "2a", "2b", "2c", "3a", "3b", "4a", "4b"}) {
            out.push_back(std::string(1, letter) + "-" + code);
        }
    }
    return out;
}

std::vector<std::string> sim2_ids() {
    std::vector<std::string> out;
    for (int k = 1; k <= 8; ++k) {
        out.push_back("S2-" + std::to_string(k));
    }
    return out;
}

std::string dump_catalog_json() {
    nlohmann::ordered_json doc;
    doc["format_version"] = 1;
    doc["scenarios"] = nlohmann::ordered_json::array();
    std::vector<std::string> ids = sim1_ids();
    for (const std::string& id : sim2_ids()) ids.push_back(id);
    for (const std::string& id : ids) {
        const ScenarioSpec s = catalog_scenario(id);
        const GroundTruth t = true_estimand(s);
        nlohmann::ordered_json entry;
        entry["label"] = s.label;
        entry["n"] = s.n;
        entry["p_x"] = s.p_x;
        entry["p_u"] = s.p_u;
        entry["gamma0"] = s.gamma0;
        entry["gamma_z"] = s.gamma_z;
        entry["gamma_x"] = s.gamma_x;
        entry["gamma_u"] = s.gamma_u;
        entry["gamma_zx"] = s.gamma_zx;
        entry["gamma_zu"] = s.gamma_zu;
        entry["beta0"] = s.beta0;
        entry["delta0"] = s.delta0;
        entry["delta1"] = s.delta1;
        entry["beta_x"] = s.beta_x;
        entry["beta_u"] = s.beta_u;
        entry["tau_x"] = s.tau_x;
        entry["tau_u"] = s.tau_u;
        entry["sigma"] = s.sigma;
        nlohmann::ordered_json truth;
        truth["estimand"] = t.estimand;
        truth["compliance_rate0"] = t.compliance_rate0;
        truth["compliance_rate1"] = t.compliance_rate1;
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (int z = 0; z <= 1; ++z) {
            for (int x = 0; x <= 1; ++x) {
                for (int u = 0; u <= 1; ++u) {
                    cells.push_back({{"z", z},
                                     {"x", x},
                                     {"u", u},
                                     {"compliance_prob", t.cell_prob[z][x][u]}});
                }
            }
        }
        truth["cells"] = cells;
        entry["ground_truth"] = truth;
        doc["scenarios"].push_back(entry);
    }
    return doc.dump(2) + "\n";
}

std::uint64_t catalog_hash() {
    const std::string text = dump_catalog_json();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : text) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace nitrial
