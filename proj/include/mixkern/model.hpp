#pragma once

#include "mixkern/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mixkern::model {

enum class EntryDist { Gaussian, Rademacher, StudentT };

struct EntryDistribution {
    EntryDist tag = EntryDist::Gaussian;
    int df = 7;  // StudentT only; needs df > 2 for unit-variance standardization
};

// Descriptor of a covariance perturbation E of I_p. Structured kinds keep
// trace / Frobenius / operator norm and the (I+E)^{1/2} action at O(p).
struct CovPerturbation {
    enum class Kind { Zero, IsoScalar, Diagonal, Dense };

    Kind kind = Kind::Zero;
    double alpha = 0.0;  // IsoScalar: E = alpha * I_p / sqrt(p)
    Vec diag;            // Diagonal: E = diag(d)
    Mat dense;           // Dense: symmetric E

    double trace(int p) const;
    double frobenius_sq(int p) const;
    double op_norm(int p) const;
    // eigenvalues of I + E all strictly positive
    bool identity_plus_spd(int p) const;
    // y = (I + E)^{1/2} x, closed form for structured kinds
    void apply_sqrt_identity_plus(int p, const double* x, double* y) const;
    // diagonal of I + E if the descriptor is diagonal-like; throws for Dense
    Vec identity_plus_diagonal(int p) const;
    bool is_diagonal_like() const { return kind != Kind::Dense; }
    Mat identity_plus_dense(int p) const;
};

struct MixtureParams {
    int n = 0;
    int p = 0;
    Vec mu1, mu2;
    CovPerturbation e1, e2;
    EntryDistribution dist;

    void validate() const;
};

struct Dataset {
    Mat X;  // p x n observations
    Mat Z;  // p x n underlying noise (kept for the spiked construction)
    std::vector<int> labels;  // block-ordered: first n/2 are class 1
};

// Column i uses its own RNG stream derived from (seed, i); the draw is
// bit-reproducible for a fixed seed under any thread count.
Dataset sample_mixture(const MixtureParams& params, uint64_t seed);

// Normalized magnitudes behind Assumption-style growth bounds. Reports only;
// finite-p pass thresholds are configurable and deliberately loose.
struct RegimeReport {
    struct Entry {
        std::string name;
        double magnitude;
        double bound;
        bool pass;
    };
    std::vector<Entry> entries;
    bool all_pass = true;
};
RegimeReport validate_regime(const MixtureParams& params, double bound = 100.0);

// Neyman-Pearson oracle statistics:
//   E_T = tr((I+E1)(I+E2)^{-1})/p - 1 + dmu^T (I+E2)^{-1} dmu / p
//         - log(det(I+E1)/det(I+E2))/p
//   V_T = 2/p^2 ||(I+E1)^{1/2}(I+E2)^{-1}(I+E1)^{1/2} - I||_F^2
//         + 4/p^2 dmu^T (I+E2)^{-1}(I+E1)(I+E2)^{-1} dmu
// and error_rate = Phi(-E_T/sqrt(V_T)).
struct OracleReport {
    double e_t = 0.0;
    double v_t = 0.0;
    double error_rate = 0.5;
};
OracleReport oracle_stats(const MixtureParams& params);

// Presets from the figure captions: fig1, fig2, fig3 (fig3 = fig2 geometry
// with Rademacher entries).
MixtureParams canonical_scenario(const std::string& name);

// {n, p, mu: {kind:"first_coord", value}, e: {kind, value}, dist[, df]}
MixtureParams scenario_from_json(const nlohmann::json& config);
MixtureParams load_scenario(const std::string& path);

// flat binary: u64 magic, u32 p, u32 n header then row-major float64
void write_matrix(const std::string& path, const Mat& m);
Mat read_matrix(const std::string& path);

}  // namespace mixkern::model
