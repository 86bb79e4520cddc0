#include "mixkern/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <lapacke.h>
#include <nlohmann/json.hpp>

namespace mixkern::expt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// full symmetric eigendecomposition with vectors, the direct dense route
void dense_eig_full(const Mat& m, std::vector<double>& values) {
    Mat work = m;
    const int n = static_cast<int>(m.rows());
    values.resize(n);
    const int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, work.data(), n, values.data());
    if (info != 0)
        throw SolverError("dense eigendecomposition failed, info " + std::to_string(info),
                          static_cast<double>(info));
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::vector<int> spectral_cluster(const eigs::LinOp& op, uint64_t seed) {
    const eigs::TopEig top = eigs::top_eig(op, seed);
    const double mean = top.vector.mean();
    std::vector<int> labels(op.n);
    for (int i = 0; i < op.n; ++i) labels[i] = top.vector(i) - mean > 0.0 ? 1 : 2;
    return labels;
}

double cluster_accuracy(const std::vector<int>& labels, const std::vector<int>& truth) {
    if (labels.size() != truth.size())
        throw std::invalid_argument("cluster_accuracy: length mismatch");
    if (labels.empty()) throw std::invalid_argument("cluster_accuracy: empty labels");
    size_t agree = 0;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == truth[i]) ++agree;
    const double frac = static_cast<double>(agree) / static_cast<double>(labels.size());
    return std::max(frac, 1.0 - frac);
}

double class_alignment(const Vec& top_vector, int n) {
    Vec signature(n);
    for (int i = 0; i < n; ++i) signature(i) = i < n / 2 ? 1.0 : -1.0;
    signature /= std::sqrt(static_cast<double>(n));
    return std::abs(top_vector.dot(signature)) / top_vector.norm();
}

model::MixtureParams preset_scenario(const std::string& name, int n, int p) {
    model::MixtureParams base = model::canonical_scenario(name);
    model::MixtureParams out = base;
    out.n = n;
    out.p = p;
    out.mu1 = Vec::Zero(p);
    out.mu1(0) = base.mu1(0);
    out.mu2 = -out.mu1;
    return out;  // IsoScalar/Zero descriptors carry over unchanged
}

std::vector<EquivCase> equiv_experiment(const std::string& preset,
                                        const std::vector<std::pair<int, int>>& sizes,
                                        const std::vector<uint64_t>& seeds,
                                        const hermite::KernelFunc& f,
                                        const hermite::HermiteCoeffs& coeffs) {
    std::vector<EquivCase> cases;
    for (const auto& [n, p] : sizes) {
        const model::MixtureParams params = preset_scenario(preset, n, p);
        for (uint64_t seed : seeds) {
            const model::Dataset data = model::sample_mixture(params, seed);
            const kernel::KernelMatrix K = kernel::build_kernel(data.X, f);
            const kernel::KernelMatrix K_N = kernel::build_null_kernel(data.Z, f);
            const spiked::ClassStats stats = spiked::class_stats(params, data.labels);
            const spiked::SpikeModel spike = spiked::build_spike(data.Z, coeffs, stats);

            EquivCase c;
            c.n = n;
            c.p = p;
            c.seed = seed;
            c.opnorm_diff = spiked::opnorm_diff(K, K_N, spike, seed);
            const Vec se = spike.eigenvalues();
            c.spike_eigs.assign(se.data(), se.data() + se.size());
            const eigs::TopEig top = eigs::top_eig(eigs::dense_op(K.data), seed);
            c.alignment = class_alignment(top.vector, n);
            cases.push_back(std::move(c));
        }
    }
    return cases;
}

ParityReport parity_experiment(const hermite::KernelFunc& f, const std::string& preset,
                               const std::vector<uint64_t>& seeds, int bins) {
    ParityReport report;
    report.target = hermite::compute_coeffs(f);
    if (std::abs(report.target.a0) > 1e-8)
        throw std::invalid_argument("parity_experiment: center f first (a0 != 0)");
    report.designed = proto::design_piecewise(report.target).proto;
    report.cubic = hermite::cubic_equivalent(report.target);

    const hermite::KernelFunc proto_kf = proto::to_kernel_func(report.designed);
    const hermite::KernelFunc cubic_kf = report.cubic.to_kernel_func();

    const model::MixtureParams params = model::canonical_scenario(preset);
    const int n = params.n;
    const int p = params.p;
    const spectrum::LimitParams lp{report.target.a1, report.target.nu,
                                   static_cast<double>(p) / n};
    const auto bounds = spectrum::support_bounds(lp);
    const spectrum::Support support = spectrum::find_support(lp, bounds.first, bounds.second);

    std::vector<int> truth(n);
    for (int i = 0; i < n; ++i) truth[i] = i < n / 2 ? 1 : 2;

    double hull_lo = support.empty() ? -1.0 : support.front().first;
    double hull_hi = support.empty() ? 1.0 : support.back().second;

    for (uint64_t seed : seeds) {
        const model::Dataset data = model::sample_mixture(params, seed);
        const Mat G = kernel::gram(data.X);

        const kernel::KernelMatrix K_orig = kernel::apply_kernel_func(G, f, p);
        const kernel::KernelMatrix K_cubic = kernel::apply_kernel_func(G, cubic_kf, p);
        const kernel::KernelMatrix K_proto = kernel::apply_kernel_func(G, proto_kf, p);
        kernel::TernaryKernel tern = kernel::quantize_from_gram(G, report.designed, p);

        ParityCase c;
        c.seed = seed;
        c.acc_original =
            cluster_accuracy(spectral_cluster(eigs::dense_op(K_orig.data), seed), truth);
        c.acc_cubic =
            cluster_accuracy(spectral_cluster(eigs::dense_op(K_cubic.data), seed), truth);

        // the prototype route runs on the packed representation
        auto t0 = Clock::now();
        c.acc_proto = cluster_accuracy(spectral_cluster(eigs::ternary_op(tern), seed), truth);
        c.ternary_topeig_seconds = seconds_since(t0);

        const std::vector<double> esd_proto = spectrum::empirical_esd(K_proto);
        t0 = Clock::now();
        std::vector<double> esd_cubic;
        dense_eig_full(K_cubic.data, esd_cubic);
        c.dense_eig_seconds = seconds_since(t0);

        c.spikes_proto = spectrum::detect_spikes(esd_proto, support);
        c.spikes_cubic = spectrum::detect_spikes(esd_cubic, support);
        c.bulk_l1_proto_cubic = spectrum::hist_distance(esd_proto, esd_cubic, bins,
                                                        hull_lo - 0.1, hull_hi + 0.1);
        c.spike_rel_gap = 0.0;
        const size_t matched = std::min(c.spikes_proto.size(), c.spikes_cubic.size());
        for (size_t s = 0; s < matched; ++s) {
            const double a = c.spikes_proto[c.spikes_proto.size() - 1 - s];
            const double b = c.spikes_cubic[c.spikes_cubic.size() - 1 - s];
            const double denom = std::max(std::abs(a), std::abs(b));
            if (denom > 0.0)
                c.spike_rel_gap = std::max(c.spike_rel_gap, std::abs(a - b) / denom);
        }
        c.ternary_bytes = tern.bytes();
        c.dense_bytes = sizeof(double) * size_t(n) * n;
        report.cases.push_back(std::move(c));
    }

    for (const ParityCase& c : report.cases) {
        report.mean_acc_gap += std::abs(c.acc_proto - c.acc_cubic);
        report.mean_bulk_l1 += c.bulk_l1_proto_cubic;
        report.max_spike_rel_gap = std::max(report.max_spike_rel_gap, c.spike_rel_gap);
    }
    if (!report.cases.empty()) {
        report.mean_acc_gap /= static_cast<double>(report.cases.size());
        report.mean_bulk_l1 /= static_cast<double>(report.cases.size());
    }
    return report;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_double(row[i]);
        out << "\n";
    }
}

namespace {

void write_eigs_csv(const std::string& path, const std::vector<double>& eigs) {
    std::vector<std::vector<double>> rows;
    rows.reserve(eigs.size());
    for (double e : eigs) rows.push_back({e});
    write_csv(path, {"eigenvalue"}, rows);
}

void write_vector_csv(const std::string& path, const Vec& v) {
    std::vector<std::vector<double>> rows;
    rows.reserve(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        rows.push_back({static_cast<double>(i), v(i)});
    write_csv(path, {"index", "value"}, rows);
}

void write_density_csv(const std::string& path, const spectrum::DensityCurve& curve) {
    std::vector<std::vector<double>> rows;
    rows.reserve(curve.grid.size());
    for (size_t i = 0; i < curve.grid.size(); ++i)
        rows.push_back({curve.grid[i], curve.density[i]});
    write_csv(path, {"x", "density"}, rows);
}

std::vector<double> density_grid(const spectrum::LimitParams& lp, int points) {
    const auto bounds = spectrum::support_bounds(lp);
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = bounds.first + (bounds.second - bounds.first) * i / (points - 1);
    return grid;
}

nlohmann::json support_json(const spectrum::Support& support) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [a, b] : support) arr.push_back({a, b});
    return arr;
}

}  // namespace

std::vector<std::string> reproduce_figure(const std::string& name, const std::string& out_dir,
                                          uint64_t seed) {
    std::vector<std::string> files;
    auto emit = [&](const std::string& file) {
        files.push_back(out_dir + "/" + file);
        return files.back();
    };
    nlohmann::json summary;
    summary["figure"] = name;
    summary["seed"] = seed;

    if (name == "fig1") {
        const model::MixtureParams params = model::canonical_scenario("fig1");
        const hermite::KernelFunc f = hermite::sign_func();
        const model::Dataset data = model::sample_mixture(params, seed);
        const kernel::KernelMatrix K = kernel::build_kernel(data.X, f);
        const kernel::KernelMatrix K_N = kernel::build_null_kernel(data.Z, f);
        const std::vector<double> eigs_K = spectrum::empirical_esd(K);
        const std::vector<double> eigs_KN = spectrum::empirical_esd(K_N);

        const spectrum::LimitParams lp{std::sqrt(2.0 / M_PI), 1.0,
                                       static_cast<double>(params.p) / params.n};
        const spectrum::DensityCurve curve = spectrum::limiting_density(lp, density_grid(lp, 1200));

        write_eigs_csv(emit("fig1_eigs_K.csv"), eigs_K);
        write_eigs_csv(emit("fig1_eigs_KN.csv"), eigs_KN);
        write_density_csv(emit("fig1_density.csv"), curve);
        const eigs::TopEig top_K = eigs::top_eig(eigs::dense_op(K.data), seed);
        const eigs::TopEig top_KN = eigs::top_eig(eigs::dense_op(K_N.data), seed);
        write_vector_csv(emit("fig1_topvec_K.csv"), top_K.vector);
        write_vector_csv(emit("fig1_topvec_KN.csv"), top_KN.vector);

        std::vector<int> truth(params.n);
        for (int i = 0; i < params.n; ++i) truth[i] = i < params.n / 2 ? 1 : 2;
        summary["spikes_K"] = spectrum::detect_spikes(eigs_K, curve.support);
        summary["spikes_KN"] = spectrum::detect_spikes(eigs_KN, curve.support);
        summary["support"] = support_json(curve.support);
        summary["l1_KN_vs_curve"] = spectrum::esd_distance(eigs_KN, curve, 50);
        summary["alignment_K"] = class_alignment(top_K.vector, params.n);
        summary["alignment_KN"] = class_alignment(top_KN.vector, params.n);
        summary["accuracy"] =
            cluster_accuracy(spectral_cluster(eigs::dense_op(K.data), seed), truth);
    } else if (name == "fig2") {
        const char* fnames[3] = {"P1", "P2", "P3"};
        for (const std::string dist : {"gaussian", "student"}) {
            model::MixtureParams params = model::canonical_scenario("fig2");
            if (dist == "student") {
                params.dist.tag = model::EntryDist::StudentT;
                params.dist.df = 7;
            }
            const model::Dataset data = model::sample_mixture(params, seed);
            const Mat G_X = kernel::gram(data.X);
            const Mat G_Z = kernel::gram(data.Z);
            const spiked::ClassStats stats = spiked::class_stats(params, data.labels);
            for (int l = 1; l <= 3; ++l) {
                const hermite::KernelFunc f = hermite::hermite_func(l);
                const kernel::KernelMatrix K = kernel::apply_kernel_func(G_X, f, params.p);
                const kernel::KernelMatrix K_N = kernel::apply_kernel_func(G_Z, f, params.p);
                hermite::HermiteCoeffs coeffs;
                coeffs.a1 = l == 1 ? 1.0 : 0.0;
                coeffs.a2 = l == 2 ? 1.0 : 0.0;
                coeffs.nu = 1.0;
                const spiked::SpikeModel spike = spiked::build_spike(data.Z, coeffs, stats);
                const Mat K_tilde = K_N.data + spike.dense();

                const std::vector<double> eigs_K = spectrum::empirical_esd(K);
                const std::vector<double> eigs_Kt = spectrum::empirical_esd(K_tilde);
                const spectrum::LimitParams lp{coeffs.a1, coeffs.nu,
                                               static_cast<double>(params.p) / params.n};
                const spectrum::DensityCurve curve =
                    spectrum::limiting_density(lp, density_grid(lp, 1200));

                const std::string stem = "fig2_" + dist + "_" + fnames[l - 1];
                write_eigs_csv(emit(stem + "_eigs_K.csv"), eigs_K);
                write_eigs_csv(emit(stem + "_eigs_Ktilde.csv"), eigs_Kt);
                write_density_csv(emit(stem + "_density.csv"), curve);

                nlohmann::json panel;
                panel["spikes_K"] = spectrum::detect_spikes(eigs_K, curve.support);
                panel["spikes_Ktilde"] = spectrum::detect_spikes(eigs_Kt, curve.support);
                panel["support"] = support_json(curve.support);
                panel["opnorm_K_minus_Ktilde"] =
                    spiked::opnorm_diff(K, K_N, spike, seed);
                summary[stem] = panel;
            }
        }
    } else if (name == "fig5") {
        const model::MixtureParams params = model::canonical_scenario("fig3");
        proto::PiecewiseProto pw;
        pw.t = 2.0;
        pw.s_minus = 0.0;
        pw.s_plus = 1.0;  // reference prototype of this preset
        const hermite::HermiteCoeffs coeffs = proto::coeffs_of_piecewise(pw);
        const hermite::CubicFunc cubic = hermite::cubic_equivalent(coeffs);

        const model::Dataset data = model::sample_mixture(params, seed);
        const Mat G = kernel::gram(data.X);
        const kernel::KernelMatrix K_pw =
            kernel::apply_kernel_func(G, proto::to_kernel_func(pw), params.p);
        const kernel::KernelMatrix K_cu =
            kernel::apply_kernel_func(G, cubic.to_kernel_func(), params.p);

        const std::vector<double> eigs_pw = spectrum::empirical_esd(K_pw);
        const std::vector<double> eigs_cu = spectrum::empirical_esd(K_cu);
        const spectrum::LimitParams lp{coeffs.a1, coeffs.nu,
                                       static_cast<double>(params.p) / params.n};
        const spectrum::DensityCurve curve = spectrum::limiting_density(lp, density_grid(lp, 1200));

        write_eigs_csv(emit("fig5_eigs_piecewise.csv"), eigs_pw);
        write_eigs_csv(emit("fig5_eigs_cubic.csv"), eigs_cu);
        write_density_csv(emit("fig5_density.csv"), curve);
        const eigs::TopEig top_pw = eigs::top_eig(eigs::dense_op(K_pw.data), seed);
        const eigs::TopEig top_cu = eigs::top_eig(eigs::dense_op(K_cu.data), seed);
        write_vector_csv(emit("fig5_topvec_piecewise.csv"), top_pw.vector);
        write_vector_csv(emit("fig5_topvec_cubic.csv"), top_cu.vector);

        std::vector<int> truth(params.n);
        for (int i = 0; i < params.n; ++i) truth[i] = i < params.n / 2 ? 1 : 2;
        summary["coeffs"] = {{"a1", coeffs.a1}, {"a2", coeffs.a2}, {"nu", coeffs.nu}};
        summary["cubic"] = {{"c1", cubic.c1}, {"c2", cubic.c2}, {"c3", cubic.c3}};
        summary["spikes_piecewise"] = spectrum::detect_spikes(eigs_pw, curve.support);
        summary["spikes_cubic"] = spectrum::detect_spikes(eigs_cu, curve.support);
        summary["support"] = support_json(curve.support);
        summary["accuracy_piecewise"] =
            cluster_accuracy(spectral_cluster(eigs::dense_op(K_pw.data), seed), truth);
        summary["accuracy_cubic"] =
            cluster_accuracy(spectral_cluster(eigs::dense_op(K_cu.data), seed), truth);
        summary["hist_l1_piecewise_vs_cubic"] = spectrum::hist_distance(
            eigs_pw, eigs_cu, 50, curve.support.front().first - 0.1,
            curve.support.back().second + 0.1);
    } else {
        throw std::invalid_argument("reproduce_figure: name must be fig1, fig2 or fig5");
    }

    const std::string json_path = out_dir + "/" + name + "_summary.json";
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot open for write: " + json_path);
    out << summary.dump(2) << "\n";
    files.push_back(json_path);
    return files;
}

BenchReport run_bench(int n, int p, uint64_t seed, int reps, bool include_serial_gram) {
    BenchReport report;
    report.n = n;
    report.p = p;
    report.reps = reps;

    model::MixtureParams params = preset_scenario("fig3", n, p);
    // the figure preset needs sqrt(p) > 10 to keep I + E definite; shrink the
    // perturbation at toy sizes (the bench only cares about timings)
    const double max_alpha = 0.5 * std::sqrt(static_cast<double>(p));
    params.e1.alpha = -std::min(10.0, max_alpha);
    params.e2.alpha = -params.e1.alpha;
    const model::Dataset data = model::sample_mixture(params, seed);

    proto::PiecewiseProto pw;
    pw.t = 2.0;
    pw.s_minus = 0.0;
    pw.s_plus = 1.0;
    const hermite::CubicFunc cubic =
        hermite::cubic_equivalent(proto::coeffs_of_piecewise(pw));
    const hermite::KernelFunc cubic_kf = cubic.to_kernel_func();

    auto time_median = [&](int count, auto&& body) {
        std::vector<double> times;
        times.reserve(count);
        for (int r = 0; r < count; ++r) {
            const auto t0 = Clock::now();
            body();
            times.push_back(seconds_since(t0));
        }
        return median_of(times);
    };

    Mat G;
    report.gram_omp_seconds = time_median(reps, [&] { G = kernel::gram(data.X); });
    if (include_serial_gram)
        report.gram_serial_seconds =
            time_median(std::max(1, reps / 2), [&] { Mat g = kernel::gram_serial(data.X); });

    kernel::KernelMatrix K;
    report.map_omp_seconds =
        time_median(reps, [&] { K = kernel::apply_kernel_func(G, cubic_kf, p); });
    {
        const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
        report.map_serial_seconds = time_median(std::max(1, reps / 2), [&] {
            Mat dense(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    const double v = cubic_kf(G(i, j)) * inv_sqrt_p;
                    dense(i, j) = v;
                    dense(j, i) = v;
                }
                dense(i, i) = 0.0;
            }
        });
    }

    kernel::TernaryKernel tern = kernel::quantize_from_gram(G, pw, p);
    report.ternary_bytes = tern.bytes();
    report.dense_bytes = sizeof(double) * size_t(n) * n;

    Vec v = Vec::Ones(n) / std::sqrt(double(n));
    Vec out(n);
    report.matvec_dense_seconds =
        time_median(reps, [&] { out.noalias() = K.data * v; });
    report.matvec_ternary_omp_seconds =
        time_median(reps, [&] { kernel::ternary_matvec(tern, v.data(), out.data()); });
    report.matvec_ternary_serial_seconds =
        time_median(reps, [&] { kernel::ternary_matvec_serial(tern, v.data(), out.data()); });

    report.ternary_topeig_seconds = time_median(reps, [&] {
        eigs::TopEig top = eigs::top_eig(eigs::ternary_op(tern), seed);
        (void)top;
    });
    report.dense_eigendecomp_seconds = time_median(reps, [&] {
        std::vector<double> values;
        dense_eig_full(K.data, values);
    });
    return report;
}

}  // namespace mixkern::expt
