#include "mixkern/experiments.hpp"
#include "mixkern/hermite.hpp"
#include "mixkern/kernel.hpp"
#include "mixkern/model.hpp"
#include "mixkern/prototype.hpp"
#include "mixkern/spectrum.hpp"
#include "mixkern/spiked.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <omp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

extern "C" void openblas_set_num_threads(int);

namespace mk = mixkern;
using nlohmann::json;

namespace {

struct GlobalOpts {
    uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 0;
    std::string config;
    bool seed_given = false;
};

mk::model::MixtureParams resolve_scenario(const GlobalOpts& g, const std::string& scenario,
                                          uint64_t& seed) {
    if (!g.config.empty()) {
        std::ifstream in(g.config);
        if (!in) throw std::runtime_error("cannot open config: " + g.config);
        json cfg;
        in >> cfg;
        if (cfg.contains("seed") && !g.seed_given) seed = cfg["seed"].get<uint64_t>();
        return mk::model::scenario_from_json(cfg);
    }
    return mk::model::canonical_scenario(scenario);
}

json coeffs_json(const mk::hermite::HermiteCoeffs& c) {
    return {{"a0", c.a0}, {"a1", c.a1}, {"a2", c.a2}, {"nu", c.nu}};
}

std::vector<std::pair<int, int>> parse_sizes(const std::string& text) {
    std::vector<std::pair<int, int>> sizes;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto x = tok.find('x');
        if (x == std::string::npos) throw std::invalid_argument("sizes: expected NxP pairs");
        sizes.emplace_back(std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1)));
    }
    return sizes;
}

std::vector<uint64_t> seed_list(uint64_t base, int count) {
    std::vector<uint64_t> seeds(count);
    for (int i = 0; i < count; ++i) seeds[i] = base + i;
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixkern: inner-product kernel spectra under two-class mixtures"};
    app.require_subcommand(1);

    GlobalOpts g;
    auto* seed_opt = app.add_option("--seed", g.seed, "base RNG seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0 = library default)");
    app.add_option("--config", g.config, "scenario config JSON file");

    // ---- sample ----
    auto* cmd_sample = app.add_subcommand("sample", "draw a mixture dataset and export it");
    std::string sample_scenario = "fig1";
    cmd_sample->add_option("--scenario", sample_scenario, "fig1|fig2|fig3");

    // ---- coeffs ----
    auto* cmd_coeffs = app.add_subcommand("coeffs", "Hermite coefficients of a builtin function");
    std::string coeffs_function = "sign";
    cmd_coeffs->add_option("function", coeffs_function,
                           "sign|relu|identity|hermite:L|cubic:c1,c2,c3|piecewise:t,s-,s+");

    // ---- spectrum ----
    auto* cmd_spectrum = app.add_subcommand("spectrum", "empirical spectrum of a kernel");
    std::string spectrum_scenario = "fig1", spectrum_function = "sign";
    bool spectrum_null = false;
    cmd_spectrum->add_option("--scenario", spectrum_scenario, "fig1|fig2|fig3");
    cmd_spectrum->add_option("--function", spectrum_function, "kernel function spec");
    cmd_spectrum->add_flag("--null", spectrum_null, "use the null model (noise only)");

    // ---- density ----
    auto* cmd_density = app.add_subcommand("density", "limiting spectral density curve");
    double den_a1 = 0.0, den_nu = 1.0, den_c = 1.0, den_eps = 1e-6;
    int den_points = 1200;
    std::string den_function;
    cmd_density->add_option("--a1", den_a1, "first Hermite coefficient");
    cmd_density->add_option("--nu", den_nu, "variance of f");
    cmd_density->add_option("--c", den_c, "ratio p/n")->required();
    cmd_density->add_option("--function", den_function, "derive a1, nu from a function spec");
    cmd_density->add_option("--points", den_points, "grid size");
    cmd_density->add_option("--eps", den_eps, "imaginary offset");

    // ---- equiv ----
    auto* cmd_equiv = app.add_subcommand("equiv", "spiked-equivalent operator-norm ladder");
    std::string equiv_scenario = "fig2", equiv_function = "hermite:1",
                equiv_sizes = "512x2048,1024x4096,2048x8192";
    int equiv_seeds = 5;
    cmd_equiv->add_option("--scenario", equiv_scenario, "preset name");
    cmd_equiv->add_option("--function", equiv_function, "kernel function spec");
    cmd_equiv->add_option("--sizes", equiv_sizes, "ladder as NxP,NxP,...");
    cmd_equiv->add_option("--num-seeds", equiv_seeds, "seeds per size");

    // ---- design ----
    auto* cmd_design = app.add_subcommand("design", "ternary prototype for a target (a1,a2,nu)");
    double des_a1 = 0.0, des_a2 = 0.0, des_nu = 0.0;
    std::string des_function;
    cmd_design->add_option("--a1", des_a1, "target a1");
    cmd_design->add_option("--a2", des_a2, "target a2");
    cmd_design->add_option("--nu", des_nu, "target nu");
    cmd_design->add_option("--function", des_function, "take the target from a function spec");

    // ---- cluster ----
    auto* cmd_cluster = app.add_subcommand("cluster", "spectral clustering accuracy");
    std::string cl_scenario = "fig1", cl_function = "sign";
    bool cl_ternary = false;
    cmd_cluster->add_option("--scenario", cl_scenario, "preset name");
    cmd_cluster->add_option("--function", cl_function, "kernel function spec");
    cmd_cluster->add_flag("--ternary", cl_ternary,
                          "cluster on the packed ternary equivalent of the function");

    // ---- parity ----
    auto* cmd_parity = app.add_subcommand("parity",
                                          "original vs cubic vs ternary prototype comparison");
    std::string par_scenario = "fig3", par_function = "piecewise:2,0,1";
    int par_seeds = 10;
    cmd_parity->add_option("--scenario", par_scenario, "preset name");
    cmd_parity->add_option("--function", par_function, "kernel function spec");
    cmd_parity->add_option("--num-seeds", par_seeds, "number of seeds");

    // ---- reproduce ----
    auto* cmd_reproduce = app.add_subcommand("reproduce", "figure-reproduction driver");
    std::string rep_figure = "fig1";
    cmd_reproduce->add_option("figure", rep_figure, "fig1|fig2|fig5");

    // ---- bench ----
    auto* cmd_bench = app.add_subcommand("bench", "serial vs OpenMP and packed vs dense timings");
    int bench_n = 1024, bench_p = 2048, bench_reps = 5;
    bool bench_skip_serial = false;
    cmd_bench->add_option("--n", bench_n, "samples");
    cmd_bench->add_option("--p", bench_p, "dimension");
    cmd_bench->add_option("--reps", bench_reps, "repetitions per timing");
    cmd_bench->add_flag("--skip-serial", bench_skip_serial, "skip the serial gram reference");

    CLI11_PARSE(app, argc, argv);
    g.seed_given = seed_opt->count() > 0;

    try {
        if (g.threads > 0) {
            omp_set_num_threads(g.threads);
            openblas_set_num_threads(g.threads);
        }
        std::filesystem::create_directories(g.out_dir);
        json out;

        if (cmd_sample->parsed()) {
            uint64_t seed = g.seed;
            const auto params = resolve_scenario(g, sample_scenario, seed);
            const auto data = mk::model::sample_mixture(params, seed);
            mk::model::write_matrix(g.out_dir + "/X.bin", data.X);
            mk::model::write_matrix(g.out_dir + "/Z.bin", data.Z);
            {
                std::vector<std::vector<double>> rows;
                for (size_t i = 0; i < data.labels.size(); ++i)
                    rows.push_back({double(i), double(data.labels[i])});
                mk::expt::write_csv(g.out_dir + "/labels.csv", {"index", "label"}, rows);
            }
            const auto regime = mk::model::validate_regime(params);
            const auto oracle = mk::model::oracle_stats(params);
            out["files"] = {g.out_dir + "/X.bin", g.out_dir + "/Z.bin",
                            g.out_dir + "/labels.csv"};
            out["regime"] = json::array();
            for (const auto& e : regime.entries)
                out["regime"].push_back({{"name", e.name},
                                         {"magnitude", e.magnitude},
                                         {"bound", e.bound},
                                         {"pass", e.pass}});
            out["oracle"] = {{"E_T", oracle.e_t},
                             {"V_T", oracle.v_t},
                             {"error_rate", oracle.error_rate}};
        } else if (cmd_coeffs->parsed()) {
            const auto f = mk::hermite::parse_builtin(coeffs_function);
            out = coeffs_json(mk::hermite::compute_coeffs(f));
        } else if (cmd_spectrum->parsed()) {
            uint64_t seed = g.seed;
            const auto params = resolve_scenario(g, spectrum_scenario, seed);
            const auto f = mk::hermite::parse_builtin(spectrum_function);
            const auto data = mk::model::sample_mixture(params, seed);
            const auto K = spectrum_null ? mk::kernel::build_null_kernel(data.Z, f)
                                         : mk::kernel::build_kernel(data.X, f);
            const auto eigs = mk::spectrum::empirical_esd(K);
            const auto coeffs = mk::hermite::compute_coeffs(f);
            const mk::spectrum::LimitParams lp{coeffs.a1, coeffs.nu,
                                               double(params.p) / params.n};
            const auto bounds = mk::spectrum::support_bounds(lp);
            std::vector<double> grid(1200);
            for (int i = 0; i < 1200; ++i)
                grid[i] = bounds.first + (bounds.second - bounds.first) * i / 1199.0;
            const auto curve = mk::spectrum::limiting_density(lp, grid);

            std::vector<std::vector<double>> rows;
            for (double e : eigs) rows.push_back({e});
            mk::expt::write_csv(g.out_dir + "/spectrum.csv", {"eigenvalue"}, rows);
            out["csv"] = g.out_dir + "/spectrum.csv";
            out["support"] = json::array();
            for (const auto& [a, b] : curve.support) out["support"].push_back({a, b});
            out["spikes"] = mk::spectrum::detect_spikes(eigs, curve.support);
            out["l1_distance"] = mk::spectrum::esd_distance(eigs, curve, 50);
        } else if (cmd_density->parsed()) {
            mk::spectrum::LimitParams lp{den_a1, den_nu, den_c};
            if (!den_function.empty()) {
                const auto c = mk::hermite::compute_coeffs(mk::hermite::parse_builtin(den_function));
                lp.a1 = c.a1;
                lp.nu = c.nu;
            }
            const auto bounds = mk::spectrum::support_bounds(lp);
            std::vector<double> grid(den_points);
            for (int i = 0; i < den_points; ++i)
                grid[i] = bounds.first + (bounds.second - bounds.first) * i / (den_points - 1.0);
            const auto curve = mk::spectrum::limiting_density(lp, grid, den_eps);
            std::vector<std::vector<double>> rows;
            for (size_t i = 0; i < curve.grid.size(); ++i)
                rows.push_back({curve.grid[i], curve.density[i]});
            mk::expt::write_csv(g.out_dir + "/density.csv", {"x", "density"}, rows);
            out["csv"] = g.out_dir + "/density.csv";
            out["support"] = json::array();
            for (const auto& [a, b] : curve.support) out["support"].push_back({a, b});
        } else if (cmd_equiv->parsed()) {
            const auto f = mk::hermite::parse_builtin(equiv_function);
            const auto coeffs = mk::hermite::compute_coeffs(f);
            const auto cases =
                mk::expt::equiv_experiment(equiv_scenario, parse_sizes(equiv_sizes),
                                           seed_list(g.seed, equiv_seeds), f, coeffs);
            out["sizes"] = json::array();
            out["seeds"] = json::array();
            out["opnorm_diffs"] = json::array();
            out["spike_eigenvalues"] = json::array();
            out["alignments"] = json::array();
            for (const auto& c : cases) {
                out["sizes"].push_back({c.n, c.p});
                out["seeds"].push_back(c.seed);
                out["opnorm_diffs"].push_back(c.opnorm_diff);
                out["spike_eigenvalues"].push_back(c.spike_eigs);
                out["alignments"].push_back(c.alignment);
            }
        } else if (cmd_design->parsed()) {
            mk::hermite::HermiteCoeffs target{0.0, des_a1, des_a2, des_nu};
            if (!des_function.empty()) {
                target = mk::hermite::compute_coeffs(mk::hermite::parse_builtin(des_function));
                if (std::abs(target.a0) > 1e-8)
                    throw mk::InfeasibleError("design: function has a0 != 0, center it first",
                                              std::abs(target.a0));
            }
            const auto feas = mk::proto::feasibility(target);
            if (!feas.feasible)
                throw mk::InfeasibleError("design: target infeasible for the ternary family",
                                          feas.best_residual);
            const auto res = mk::proto::design_piecewise(target);
            out = {{"t", res.proto.t},
                   {"s_minus", res.proto.s_minus},
                   {"s_plus", res.proto.s_plus},
                   {"r", res.proto.r()},
                   {"sign_flip", res.proto.sign_flip},
                   {"residual", res.residual}};
        } else if (cmd_cluster->parsed()) {
            uint64_t seed = g.seed;
            const auto params = resolve_scenario(g, cl_scenario, seed);
            const auto f = mk::hermite::parse_builtin(cl_function);
            const auto data = mk::model::sample_mixture(params, seed);
            std::vector<int> labels;
            if (cl_ternary) {
                const auto target = mk::hermite::compute_coeffs(f);
                const auto design = mk::proto::design_piecewise(target);
                const auto tern = mk::kernel::quantize_ternary(data.X, design.proto);
                labels = mk::expt::spectral_cluster(mk::eigs::ternary_op(tern), seed);
            } else {
                const auto K = mk::kernel::build_kernel(data.X, f);
                labels = mk::expt::spectral_cluster(mk::eigs::dense_op(K.data), seed);
            }
            out["accuracy"] = mk::expt::cluster_accuracy(labels, data.labels);
        } else if (cmd_parity->parsed()) {
            const auto f = mk::hermite::parse_builtin(par_function);
            const auto report =
                mk::expt::parity_experiment(f, par_scenario, seed_list(g.seed, par_seeds));
            out["target"] = coeffs_json(report.target);
            out["designed"] = {{"t", report.designed.t},
                               {"s_minus", report.designed.s_minus},
                               {"s_plus", report.designed.s_plus},
                               {"r", report.designed.r()},
                               {"sign_flip", report.designed.sign_flip}};
            out["cubic"] = {{"c1", report.cubic.c1},
                            {"c2", report.cubic.c2},
                            {"c3", report.cubic.c3}};
            out["mean_acc_gap"] = report.mean_acc_gap;
            out["mean_bulk_l1"] = report.mean_bulk_l1;
            out["max_spike_rel_gap"] = report.max_spike_rel_gap;
            out["cases"] = json::array();
            for (const auto& c : report.cases)
                out["cases"].push_back({{"seed", c.seed},
                                        {"acc_original", c.acc_original},
                                        {"acc_cubic", c.acc_cubic},
                                        {"acc_proto", c.acc_proto},
                                        {"bulk_l1", c.bulk_l1_proto_cubic},
                                        {"spikes_proto", c.spikes_proto},
                                        {"spikes_cubic", c.spikes_cubic},
                                        {"ternary_bytes", c.ternary_bytes},
                                        {"dense_bytes", c.dense_bytes},
                                        {"ternary_topeig_seconds", c.ternary_topeig_seconds},
                                        {"dense_eig_seconds", c.dense_eig_seconds}});
        } else if (cmd_reproduce->parsed()) {
            out["files"] = mk::expt::reproduce_figure(rep_figure, g.out_dir, g.seed);
        } else if (cmd_bench->parsed()) {
            const auto r = mk::expt::run_bench(bench_n, bench_p, g.seed, bench_reps,
                                               !bench_skip_serial);
            out = {{"n", r.n},
                   {"p", r.p},
                   {"reps", r.reps},
                   {"gram_serial_seconds", r.gram_serial_seconds},
                   {"gram_omp_seconds", r.gram_omp_seconds},
                   {"map_serial_seconds", r.map_serial_seconds},
                   {"map_omp_seconds", r.map_omp_seconds},
                   {"matvec_dense_seconds", r.matvec_dense_seconds},
                   {"matvec_ternary_serial_seconds", r.matvec_ternary_serial_seconds},
                   {"matvec_ternary_omp_seconds", r.matvec_ternary_omp_seconds},
                   {"ternary_topeig_seconds", r.ternary_topeig_seconds},
                   {"dense_eigendecomp_seconds", r.dense_eigendecomp_seconds},
                   {"ternary_bytes", r.ternary_bytes},
                   {"dense_bytes", r.dense_bytes}};
        }

        std::cout << out.dump(2) << std::endl;
        return 0;
    } catch (const mk::InfeasibleError& err) {
        std::cerr << "infeasible: " << err.what() << std::endl;
        return 2;
    } catch (const mk::SolverError& err) {
        std::cerr << "solver failure: " << err.what() << std::endl;
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << std::endl;
        return 1;
    }
}
