#pragma once

#include <string>
#include <vector>

#include "nitrial/dataset.hpp"
#include "nitrial/rng.hpp"

namespace nitrial {

// Full parameterization of one simulated trial scenario. Compliance follows
//   C ~ Bernoulli(expit(g0 + gz Z + gx X + gu U + gzx ZX + gzu ZU))
// and the outcome
//   Y = b0 + d0 1[received standard] + (d1 + tx X + tu U) 1[received new]
//       + bx X + bu U + N(0, sigma^2).
struct ScenarioSpec {
    std::string label;
    Eigen::Index n = 0;       // participants per dataset, 1:1 allocation
    double p_x = 0.5;
    double p_u = 0.5;
    double gamma0 = 0.0;
    double gamma_z = 0.0;
    double gamma_x = 0.0;
    double gamma_u = 0.0;
    double gamma_zx = 0.0;
    double gamma_zu = 0.0;
    double beta0 = 0.0;
    double delta0 = 0.0;      // standard vs none
    double delta1 = 0.0;      // new vs none
    double beta_x = 0.0;
    double beta_u = 0.0;
    double tau_x = 0.0;       // new-treatment effect modification by X
    double tau_u = 0.0;
    double sigma = 1.0;

    void validate() const;

    // Compliance probability for one (z, x, u) cell.
    double compliance_prob(int z, int x, int u) const;
};

struct GroundTruth {
    double estimand = 0.0;          // delta1 - delta0 + tau_x p_x + tau_u p_u
    double compliance_rate0 = 0.0;  // analytic arm averages over (x, u) cells
    double compliance_rate1 = 0.0;
    // per-cell compliance probabilities, indexed [z][x][u]
    double cell_prob[2][2][2] = {};
};

GroundTruth true_estimand(const ScenarioSpec& spec);

// Draw one dataset: z fair coin, x ~ Bern(p_x), u ~ Bern(p_u) independent,
// then compliance and outcome per the spec's model. Bit-reproducible from
// the stream.
TrialDataset sample_dataset(const ScenarioSpec& spec, const SeedStream& stream);

// Frozen scenario catalogs. Study 1: letters A-E x compliance codes
// {1, 2a, 2b, 2c, 3a, 3b, 4a, 4b}, labels like "A-2b". Study 2: eight
// treatment-effect-heterogeneity scenarios labelled "S2-1" .. "S2-8"
// (1-4 moderate/large factors on X, 5-8 on U).
ScenarioSpec catalog_sim1(const std::string& id);
ScenarioSpec catalog_sim2(const std::string& id);

// Either catalog by label; throws UnknownScenario.
ScenarioSpec catalog_scenario(const std::string& id);

std::vector<std::string> sim1_ids();
std::vector<std::string> sim2_ids();

// JSON text of every frozen scenario with its analytic ground truth
// attached (the `dump-catalog` payload). Deterministic byte-for-byte.
std::string dump_catalog_json();

// FNV-1a hash of dump_catalog_json(), recorded in config echoes.
std::uint64_t catalog_hash();

}  // namespace nitrial
