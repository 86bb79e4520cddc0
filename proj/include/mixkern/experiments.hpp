#pragma once

#include "mixkern/eigs.hpp"
#include "mixkern/kernel.hpp"
#include "mixkern/model.hpp"
#include "mixkern/prototype.hpp"
#include "mixkern/spectrum.hpp"
#include "mixkern/spiked.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mixkern::expt {

// Two-class spectral clustering: top eigenvector, split at its mean.
std::vector<int> spectral_cluster(const eigs::LinOp& op, uint64_t seed);

// max over the two label permutations of the agreement fraction; in [0.5, 1]
// for balanced truth.
double cluster_accuracy(const std::vector<int>& labels, const std::vector<int>& truth);

// |<v_top, (j1 - j2)/sqrt n>| for block-ordered labels
double class_alignment(const Vec& top_vector, int n);

// figure preset rebuilt at an arbitrary size (mu and alpha kept fixed)
model::MixtureParams preset_scenario(const std::string& name, int n, int p);

// --- spiked equivalence ladder -------------------------------------------

struct EquivCase {
    int n = 0;
    int p = 0;
    uint64_t seed = 0;
    double opnorm_diff = 0.0;
    std::vector<double> spike_eigs;
    double alignment = 0.0;
};

std::vector<EquivCase> equiv_experiment(const std::string& preset,
                                        const std::vector<std::pair<int, int>>& sizes,
                                        const std::vector<uint64_t>& seeds,
                                        const hermite::KernelFunc& f,
                                        const hermite::HermiteCoeffs& coeffs);

// --- prototype parity ------------------------------------------------------

struct ParityCase {
    uint64_t seed = 0;
    double acc_original = 0.0;
    double acc_cubic = 0.0;
    double acc_proto = 0.0;
    double bulk_l1_proto_cubic = 0.0;
    std::vector<double> spikes_proto;
    std::vector<double> spikes_cubic;
    double spike_rel_gap = 0.0;  // worst matched relative position gap
    size_t ternary_bytes = 0;
    size_t dense_bytes = 0;
    double ternary_topeig_seconds = 0.0;
    double dense_eig_seconds = 0.0;
};

struct ParityReport {
    hermite::HermiteCoeffs target;
    proto::PiecewiseProto designed;
    hermite::CubicFunc cubic;
    std::vector<ParityCase> cases;
    double mean_acc_gap = 0.0;      // |acc_proto - acc_cubic| averaged
    double mean_bulk_l1 = 0.0;
    double max_spike_rel_gap = 0.0;
};

// On identical datasets per seed: cluster with the original f, its cubic
// equivalent and the designed ternary prototype; compare spectra and the
// storage/time of the packed representation.
ParityReport parity_experiment(const hermite::KernelFunc& f, const std::string& preset,
                               const std::vector<uint64_t>& seeds, int bins = 50);

// --- figure reproduction ----------------------------------------------------

// Emits eigenvalue/density/eigenvector CSVs plus a JSON summary per panel;
// returns the list of files written.
std::vector<std::string> reproduce_figure(const std::string& name, const std::string& out_dir,
                                          uint64_t seed);

// --- kernel benchmarks ------------------------------------------------------

struct BenchReport {
    int n = 0;
    int p = 0;
    int reps = 0;
    double gram_serial_seconds = 0.0;
    double gram_omp_seconds = 0.0;
    double map_serial_seconds = 0.0;
    double map_omp_seconds = 0.0;
    double matvec_dense_seconds = 0.0;
    double matvec_ternary_serial_seconds = 0.0;
    double matvec_ternary_omp_seconds = 0.0;
    double ternary_topeig_seconds = 0.0;
    double dense_eigendecomp_seconds = 0.0;
    size_t ternary_bytes = 0;
    size_t dense_bytes = 0;
};

// Serial-vs-OpenMP kernel comparison plus the packed-vs-dense top-eigenvector
// race. Medians over `reps` runs, steady clock.
BenchReport run_bench(int n, int p, uint64_t seed, int reps = 5, bool include_serial_gram = true);

// --- output helpers ---------------------------------------------------------

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace mixkern::expt
