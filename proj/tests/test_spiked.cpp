#include "mixkern/spiked.hpp"

#include "mixkern/experiments.hpp"
#include "mixkern/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace mixkern;
using namespace mixkern::spiked;

namespace {

model::MixtureParams small_fig2(int n, int p) { return expt::preset_scenario("fig2", n, p); }

std::vector<int> block_labels(int n) {
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i < n / 2 ? 1 : 2;
    return labels;
}

}  // namespace

TEST_SUITE_BEGIN("spiked");

TEST_CASE("class stats closed forms") {
    SUBCASE("zero perturbations zero out T and S") {
        model::MixtureParams params;
        params.n = 8;
        params.p = 16;
        params.mu1 = Vec::Zero(16);
        params.mu2 = Vec::Zero(16);
        const ClassStats stats = class_stats(params, block_labels(8));
        CHECK(stats.T.cwiseAbs().maxCoeff() == 0.0);
        CHECK(stats.S.cwiseAbs().maxCoeff() == 0.0);
        CHECK(stats.J.colwise().sum()(0) == 4.0);
    }
    SUBCASE("iso descriptors against a brute-force dense realization") {
        const int p = 64;
        const model::MixtureParams params = small_fig2(16, p);
        const ClassStats stats = class_stats(params, block_labels(16));

        const double sqrt_p = std::sqrt(double(p));
        Mat E1 = -10.0 / sqrt_p * Mat::Identity(p, p);
        Mat E2 = 10.0 / sqrt_p * Mat::Identity(p, p);
        const Mat es[2] = {E1, E2};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double t_brute = (es[a].trace() + es[b].trace()) / sqrt_p;
                const double s_brute = (es[a] * es[b]).trace() / sqrt_p;
                CHECK(stats.T(a, b) == doctest::Approx(t_brute).epsilon(1e-12));
                CHECK(stats.S(a, b) == doctest::Approx(s_brute).epsilon(1e-12));
            }
        // closed forms: T_aa = +-20, off-diagonal 0; S_ab = alpha_a alpha_b / sqrt p
        CHECK(stats.T(0, 0) == doctest::Approx(-20.0));
        CHECK(stats.T(1, 1) == doctest::Approx(20.0));
        CHECK(stats.T(0, 1) == doctest::Approx(0.0));
        CHECK(stats.S(0, 0) == doctest::Approx(100.0 / sqrt_p));
        CHECK(stats.S(0, 1) == doctest::Approx(-100.0 / sqrt_p));
    }
    SUBCASE("one point per class gives the identity indicator") {
        model::MixtureParams params;
        params.n = 2;
        params.p = 4;
        params.mu1 = Vec::Zero(4);
        params.mu2 = Vec::Zero(4);
        const ClassStats stats = class_stats(params, {1, 2});
        CHECK(stats.J(0, 0) == 1.0);
        CHECK(stats.J(1, 1) == 1.0);
        CHECK(stats.J(0, 1) == 0.0);
    }
}

TEST_CASE("spike model structure") {
    const int n = 64, p = 128;
    const model::MixtureParams params = small_fig2(n, p);
    const model::Dataset data = model::sample_mixture(params, 3);
    const ClassStats stats = class_stats(params, data.labels);

    SUBCASE("a1 = a2 = 0 kills the spike") {
        const SpikeModel spike = build_spike(data.Z, {0.0, 0.0, 0.0, 1.0}, stats);
        CHECK(spike.dense().cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("odd f: no covariance term") {
        const SpikeModel spike = build_spike(data.Z, {0.0, 1.0, 0.0, 1.0}, stats);
        const Mat expect =
            (stats.J * stats.M.transpose() * stats.M * stats.J.transpose() +
             stats.J * (stats.M.transpose() * data.Z) +
             (stats.M.transpose() * data.Z).transpose() * stats.J.transpose()) /
            double(p);
        CHECK((spike.dense() - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("even f: pure class-block structure") {
        const SpikeModel spike = build_spike(data.Z, {0.0, 0.0, 1.0, 1.0}, stats);
        const Mat dense = spike.dense();
        // entries must be constant on each class block
        for (int bi = 0; bi < 2; ++bi)
            for (int bj = 0; bj < 2; ++bj) {
                const int i0 = bi * n / 2, j0 = bj * n / 2;
                const double ref = dense(i0, j0);
                for (int i = i0; i < i0 + n / 2; ++i)
                    for (int j = j0; j < j0 + n / 2; ++j)
                        CHECK(dense(i, j) == doctest::Approx(ref).epsilon(1e-12));
            }
        const Mat expect = stats.J * (stats.T + stats.S) * stats.J.transpose() / double(p);
        CHECK((dense - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("numerical rank at most four") {
        const SpikeModel spike = build_spike(data.Z, {0.0, 0.7, 0.4, 1.0}, stats);
        const Mat dense = spike.dense();
        Eigen::SelfAdjointEigenSolver<Mat> es(dense);
        const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
        int rank = 0;
        for (int i = 0; i < n; ++i)
            if (std::abs(es.eigenvalues()(i)) > 1e-8 * scale) ++rank;
        CHECK(rank <= 4);
    }
    SUBCASE("factored eigenvalues match the dense ones") {
        const SpikeModel spike = build_spike(data.Z, {0.0, 0.7, 0.4, 1.0}, stats);
        Eigen::SelfAdjointEigenSolver<Mat> es(spike.dense());
        const Vec factored = spike.eigenvalues();  // ascending, 4 values
        // the four extreme dense eigenvalues must match (rest are zero)
        std::vector<double> dense_nonzero;
        for (int i = 0; i < n; ++i)
            if (std::abs(es.eigenvalues()(i)) > 1e-10) dense_nonzero.push_back(es.eigenvalues()(i));
        std::vector<double> fact_nonzero;
        for (int i = 0; i < 4; ++i)
            if (std::abs(factored(i)) > 1e-10) fact_nonzero.push_back(factored(i));
        REQUIRE(dense_nonzero.size() == fact_nonzero.size());
        for (size_t i = 0; i < dense_nonzero.size(); ++i)
            CHECK(fact_nonzero[i] == doctest::Approx(dense_nonzero[i]).epsilon(1e-8));
    }
    SUBCASE("matvec agrees with the dense materialization") {
        const SpikeModel spike = build_spike(data.Z, {0.0, 0.7, 0.4, 1.0}, stats);
        auto stream = rng::Xoshiro256pp::for_stream(5, 0);
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = stream.normal();
        Vec fast(n);
        spike.apply(v.data(), fast.data());
        const Vec slow = spike.dense() * v;
        CHECK((fast - slow).norm() < 1e-12 * slow.norm());
    }
}

TEST_CASE("spike eigenvector carries the classes at figure-1 geometry") {
    // For mu1 = -mu2 the spike lives in span{j1 - j2, Z^T mu}; reducing to
    // that 2x2 problem gives alignment cos(atan(2/||mu||)/2), about 0.894
    // at ||mu|| = 3/2. The noise terms keep it strictly below 0.9.
    model::MixtureParams params = model::canonical_scenario("fig1");
    const model::Dataset data = model::sample_mixture(params, 21);
    const ClassStats stats = class_stats(params, data.labels);
    const hermite::HermiteCoeffs sign_coeffs{0.0, std::sqrt(2.0 / M_PI), 0.0, 1.0};
    const SpikeModel spike = build_spike(data.Z, sign_coeffs, stats);
    const double alignment = expt::class_alignment(spike.top_eigenvector(), params.n);
    const double predicted = std::cos(0.5 * std::atan(2.0 / 1.5));
    CHECK(std::abs(alignment - predicted) < 0.01);

    // null-model 95th percentile of |<v, (j1-j2)/sqrt n>| for a random unit
    // direction is about 1.96/sqrt(n); the spike alignment dwarfs it
    CHECK(alignment > 10.0 * 1.96 / std::sqrt(double(params.n)));
}

TEST_CASE("monomial information matrix") {
    const int n = 64, p = 256;
    SUBCASE("null parameters produce the zero matrix") {
        model::MixtureParams params;
        params.n = n;
        params.p = p;
        params.mu1 = Vec::Zero(p);
        params.mu2 = Vec::Zero(p);
        const model::Dataset data = model::sample_mixture(params, 1);
        const Mat KI = build_monomial_KI(data.Z, params, data.labels, 3);
        CHECK(KI.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("E = 0 and k = 2 reduces to the mean terms") {
        model::MixtureParams params;
        params.n = n;
        params.p = p;
        params.mu1 = Vec::Zero(p);
        params.mu1(0) = -2.0;
        params.mu2 = -params.mu1;
        const model::Dataset data = model::sample_mixture(params, 2);
        const Mat KI = build_monomial_KI(data.Z, params, data.labels, 2);
        // A = 0, so K_I = (2/sqrt p) G o B with B from the mean terms only
        const double sqrt_p = std::sqrt(double(p));
        const Mat G = (data.Z.transpose() * data.Z) / sqrt_p;
        const Vec* mus[2] = {&params.mu1, &params.mu2};
        Mat expect(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) {
                    expect(i, j) = 0.0;
                    continue;
                }
                const int a = data.labels[i] - 1, b = data.labels[j] - 1;
                const double mu_terms = mus[a]->dot(*mus[b]) + mus[a]->dot(data.Z.col(j)) +
                                        mus[b]->dot(data.Z.col(i));
                expect(i, j) = 2.0 / sqrt_p * G(i, j) * (mu_terms / sqrt_p);
            }
        CHECK((KI - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("adding K_I strictly improves the monomial approximation") {
        const model::MixtureParams params = small_fig2(n, p);
        const model::Dataset data = model::sample_mixture(params, 4);
        hermite::KernelFunc cubed;
        cubed.tag = hermite::KernelFunc::Tag::Polynomial;
        cubed.f = [](double x) { return x * x * x; };
        const kernel::KernelMatrix K = kernel::build_kernel(data.X, cubed);
        const kernel::KernelMatrix K_N = kernel::build_null_kernel(data.Z, cubed);
        const Mat KI = build_monomial_KI(data.Z, params, data.labels, 3);
        const double with_ki = opnorm_diff(K.data, K_N.data + KI, 7);
        const double without = opnorm_diff(K.data, K_N.data, 7);
        CHECK(with_ki < without);
    }
    CHECK_THROWS_AS(build_monomial_KI(Mat::Zero(4, 4), small_fig2(4, 4), {1, 1, 2, 2}, 7),
                    std::invalid_argument);
}

TEST_CASE("operator norm of differences") {
    const int n = 48;
    auto stream = rng::Xoshiro256pp::for_stream(9, 0);
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = stream.normal();
    m = Mat(0.5 * (m + m.transpose()));
    SUBCASE("identical operands give zero") { CHECK(opnorm_diff(m, m, 3) < 1e-10); }
    SUBCASE("matches a dense eigensolve of the difference") {
        Mat shift = m;
        shift.diagonal().array() += 0.5;
        const double fast = opnorm_diff(m, shift, 3);
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(m - shift));
        const double exact = es.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(fast == doctest::Approx(exact).epsilon(1e-6));
    }
}

TEST_CASE("hadamard bound") {
    const int n = 32;
    SUBCASE("all-ones mask reproduces the operand norm") {
        const Mat ones = Mat::Ones(n, n);
        auto stream = rng::Xoshiro256pp::for_stream(13, 0);
        Mat b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = stream.normal();
        const auto [lhs, rhs] = hadamard_bound_check(ones, b);
        Eigen::JacobiSVD<Mat> svd(b);
        CHECK(lhs == doctest::Approx(svd.singularValues()(0)).epsilon(1e-9));
        CHECK(lhs <= rhs);
    }
    SUBCASE("identity pair") {
        const auto [lhs, rhs] = hadamard_bound_check(Mat::Identity(n, n), Mat::Identity(n, n));
        CHECK(lhs == doctest::Approx(1.0));
        CHECK(rhs == doctest::Approx(std::sqrt(double(n))));
    }
    SUBCASE("randomized property check") {
        auto stream = rng::Xoshiro256pp::for_stream(15, 0);
        for (int trial = 0; trial < 20; ++trial) {
            const int size = 8 + static_cast<int>(stream.uniform() * 56);
            Mat a(size, size), b(size, size);
            for (int i = 0; i < size; ++i)
                for (int j = 0; j < size; ++j) {
                    a(i, j) = stream.normal();
                    b(i, j) = stream.normal();
                }
            const auto [lhs, rhs] = hadamard_bound_check(a, b);
            CHECK(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("gaussian moment oracle at modest scale") {
    const MomentReport report = gaussian_moment_oracle(2, 200000, 128, 51);
    CHECK(report.rows.size() == 5);
    CHECK(report.max_deviation_se < 5.0);
    CHECK(report.rows[0].exact == 1.0);  // (2-1)!! = 1
    const MomentReport quartic = gaussian_moment_oracle(4, 200000, 128, 53);
    CHECK(quartic.rows[0].exact == 3.0);  // (4-1)!! = 3
    CHECK(quartic.max_deviation_se < 5.0);
    CHECK_THROWS_AS(gaussian_moment_oracle(3, 1000, 8, 1), std::invalid_argument);
}

TEST_SUITE_END();
