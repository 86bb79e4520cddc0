#include "mixkern/kernel.hpp"

#include "mixkern/model.hpp"
#include "mixkern/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace mixkern;
using namespace mixkern::kernel;

namespace {

Mat random_matrix(int rows, int cols, uint64_t seed) {
    auto stream = rng::Xoshiro256pp::for_stream(seed, 0);
    Mat m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = stream.normal();
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("kernel");

TEST_CASE("gram on canonical vectors") {
    Mat X = Mat::Zero(2, 2);
    X(0, 0) = 1.0;
    X(1, 1) = 1.0;
    const Mat G = gram(X);
    CHECK(G(0, 1) == 0.0);
    CHECK(G(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));

    Mat ones = Mat::Ones(9, 2);
    const Mat G2 = gram(ones);
    CHECK(G2(0, 1) == doctest::Approx(std::sqrt(9.0)));
}

TEST_CASE("OpenMP gram matches the serial reference") {
    const Mat X = random_matrix(96, 131, 5);
    const Mat a = gram(X);
    const Mat b = gram_serial(X);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("off-diagonal gram entries are asymptotically standard normal") {
    const Mat X = random_matrix(4096, 128, 9);
    const Mat G = gram(X);
    double sum = 0.0, sum2 = 0.0;
    int count = 0;
    for (int i = 0; i < G.rows(); ++i)
        for (int j = i + 1; j < G.cols(); ++j) {
            sum += G(i, j);
            sum2 += G(i, j) * G(i, j);
            ++count;
        }
    const double mean = sum / count;
    const double std_dev = std::sqrt(sum2 / count - mean * mean);
    CHECK(std_dev == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("kernel construction basics") {
    SUBCASE("identity function on constant columns") {
        Mat ones = Mat::Ones(9, 2);
        const KernelMatrix K = build_kernel(ones, hermite::identity_func());
        CHECK(K.data(0, 1) == doctest::Approx(1.0));
        CHECK(K.data(0, 0) == 0.0);
    }
    SUBCASE("sign kernel takes three values") {
        const Mat X = random_matrix(32, 40, 13);
        const KernelMatrix K = build_kernel(X, hermite::sign_func());
        const double level = 1.0 / std::sqrt(32.0);
        for (int i = 0; i < K.n; ++i)
            for (int j = 0; j < K.n; ++j) {
                if (i == j) {
                    CHECK(K.data(i, j) == 0.0);
                } else {
                    CHECK((K.data(i, j) == level || K.data(i, j) == -level ||
                           K.data(i, j) == 0.0));
                }
            }
    }
    SUBCASE("exact symmetry and zero diagonal") {
        const Mat X = random_matrix(24, 31, 17);
        const KernelMatrix K = build_kernel(X, hermite::relu_centered());
        CHECK((K.data - K.data.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(K.data.diagonal().cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("null kernel equals kernel on the same matrix") {
        const Mat Z = random_matrix(16, 10, 19);
        const KernelMatrix a = build_kernel(Z, hermite::sign_func());
        const KernelMatrix b = build_null_kernel(Z, hermite::sign_func());
        CHECK((a.data - b.data).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("parallel and serial builders agree") {
        const Mat X = random_matrix(48, 65, 23);
        const KernelMatrix a = build_kernel(X, hermite::relu_centered());
        const KernelMatrix b = build_kernel_serial(X, hermite::relu_centered());
        CHECK((a.data - b.data).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("ternary quantization round trip is bit-exact") {
    auto stream = rng::Xoshiro256pp::for_stream(29, 0);
    for (int trial = 0; trial < 8; ++trial) {
        proto::PiecewiseProto p;
        p.t = 0.5 + 2.0 * stream.uniform();
        p.s_minus = -1.0 + stream.uniform();
        p.s_plus = p.s_minus + 1.5 * stream.uniform();
        p.sign_flip = trial % 2 == 1;
        const Mat X = random_matrix(48, 50 + trial, 100 + trial);
        const TernaryKernel tk = quantize_ternary(X, p);
        const KernelMatrix direct = build_kernel(X, proto::to_kernel_func(p));
        const Mat decoded = tk.dense();
        CHECK((decoded - direct.data).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("threshold boundary conventions on a crafted gram") {
    proto::PiecewiseProto p;
    p.t = 1.0;
    p.s_minus = -0.5;
    p.s_plus = 0.5;
    const double sqrt2 = std::sqrt(2.0);
    Mat G = Mat::Zero(4, 4);
    // entries exactly at and around both thresholds
    G(0, 1) = sqrt2 * p.s_minus;          // at s-: lower branch (closed)
    G(0, 2) = sqrt2 * p.s_minus + 1e-12;  // inside the middle band
    G(0, 3) = sqrt2 * p.s_plus;           // at s+: middle band (closed)
    G(1, 2) = sqrt2 * p.s_plus + 1e-12;   // above s+: upper branch (open)
    G(1, 3) = -3.0;
    G(2, 3) = 3.0;
    G = Mat(G.selfadjointView<Eigen::Upper>());
    const TernaryKernel tk = quantize_from_gram(G, p, 16);
    CHECK(tk.code_at(TernaryKernel::triangle_index(4, 0, 1)) == 2);
    CHECK(tk.code_at(TernaryKernel::triangle_index(4, 0, 2)) == 0);
    CHECK(tk.code_at(TernaryKernel::triangle_index(4, 0, 3)) == 0);
    CHECK(tk.code_at(TernaryKernel::triangle_index(4, 1, 2)) == 1);
    CHECK(tk.code_at(TernaryKernel::triangle_index(4, 1, 3)) == 2);
    CHECK(tk.code_at(TernaryKernel::triangle_index(4, 2, 3)) == 1);
}

TEST_CASE("symmetric thresholds balance the two code populations") {
    proto::PiecewiseProto p;
    p.t = 1.0;
    p.s_minus = -0.4;
    p.s_plus = 0.4;
    const Mat X = random_matrix(256, 300, 37);
    const TernaryKernel tk = quantize_ternary(X, p);
    size_t plus = 0, minus = 0;
    const size_t entries = TernaryKernel::entry_count(tk.n);
    for (size_t k = 0; k < entries; ++k) {
        if (tk.code_at(k) == 1) ++plus;
        if (tk.code_at(k) == 2) ++minus;
    }
    const double n_total = static_cast<double>(entries);
    const double p_hat = plus / n_total, m_hat = minus / n_total;
    const double se = std::sqrt(2.0 * p_hat * (1.0 - p_hat) / n_total);
    CHECK(std::abs(p_hat - m_hat) < 3.0 * se);
}

TEST_CASE("ternary matvec agrees with the dense oracle") {
    auto stream = rng::Xoshiro256pp::for_stream(43, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 8 + static_cast<int>(stream.uniform() * 504);
        proto::PiecewiseProto p;
        p.t = 0.5 + stream.uniform();
        p.s_minus = -0.8 + 0.5 * stream.uniform();
        p.s_plus = p.s_minus + stream.uniform();
        const Mat X = random_matrix(32, n, 200 + trial);
        const TernaryKernel tk = quantize_ternary(X, p);
        const Mat dense = tk.dense();
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = stream.normal();
        const Vec fast = ternary_matvec(tk, v);
        const Vec slow = dense * v;
        const double scale = std::max(1e-300, slow.norm());
        CHECK((fast - slow).norm() / scale < 1e-10);

        Vec serial(n);
        ternary_matvec_serial(tk, v.data(), serial.data());
        CHECK((fast - serial).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("larger instance") {
        proto::PiecewiseProto p;
        p.t = 2.0;
        p.s_minus = 0.0;
        p.s_plus = 1.0;
        const int n = 512;
        const Mat X = random_matrix(64, n, 999);
        const TernaryKernel tk = quantize_ternary(X, p);
        Vec v(n);
        auto s2 = rng::Xoshiro256pp::for_stream(1000, 0);
        for (int i = 0; i < n; ++i) v(i) = s2.normal();
        const Vec fast = ternary_matvec(tk, v);
        const Vec slow = tk.dense() * v;
        CHECK((fast - slow).norm() / slow.norm() < 1e-10);
    }
    SUBCASE("zero vector and all-zero codes") {
        proto::PiecewiseProto p;
        p.t = 1.0;
        p.s_minus = -5.0;
        p.s_plus = 5.0;  // everything lands in the middle band
        const Mat X = random_matrix(16, 20, 7);
        const TernaryKernel tk = quantize_ternary(X, p);
        Vec v = Vec::Ones(20);
        CHECK(ternary_matvec(tk, v).cwiseAbs().maxCoeff() == 0.0);
        CHECK(ternary_matvec(tk, Vec::Zero(20)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("packing arithmetic") {
    CHECK(TernaryKernel::entry_count(2048) == size_t(2048) * 2047 / 2);
    // ceil(n(n-1)/8) bytes: two bits per upper-triangle entry
    CHECK(TernaryKernel::packed_bytes(2048) == (size_t(2048) * 2047 + 7) / 8);
    CHECK(TernaryKernel::packed_bytes(2048) == 524032);  // ~0.5 MB vs 33.5 MB dense

    proto::PiecewiseProto p;
    p.t = 1.0;
    p.s_minus = -0.3;
    p.s_plus = 0.3;
    for (int n : {33, 256}) {
        const Mat X = random_matrix(16, n, n);
        const TernaryKernel tk = quantize_ternary(X, p);
        CHECK(tk.bytes() <= size_t(n) * n / 4 + 64);
        const size_t dense_bytes = sizeof(double) * size_t(n) * n;
        CHECK(dense_bytes / tk.bytes() >= 32);
    }
}

TEST_CASE("packed bit order matches the documented layout") {
    // entry k occupies bits (2k mod 8) of byte floor(k/4), little-endian
    proto::PiecewiseProto p;
    p.t = 1.0;
    p.s_minus = -0.5;
    p.s_plus = 0.5;
    Mat G = Mat::Zero(3, 3);
    G(0, 1) = 3.0;   // entry k=0 -> code 1
    G(0, 2) = -3.0;  // entry k=1 -> code 2
    G(1, 2) = 0.0;   // entry k=2 -> code 0
    G = Mat(G.selfadjointView<Eigen::Upper>());
    const TernaryKernel tk = quantize_from_gram(G, p, 4);
    REQUIRE(tk.codes.size() == 1);
    CHECK(tk.codes[0] == ((1u << 0) | (2u << 2)));
}

TEST_CASE("kernel and ternary files round trip") {
    namespace fs = std::filesystem;
    const Mat X = random_matrix(24, 30, 51);
    const KernelMatrix K = build_kernel(X, hermite::sign_func());
    const std::string kpath = fs::temp_directory_path() / "mixkern_kernel_test.bin";
    write_kernel(kpath, K);
    const KernelMatrix K2 = read_kernel(kpath);
    CHECK(K2.n == K.n);
    CHECK((K2.data - K.data).cwiseAbs().maxCoeff() == 0.0);
    fs::remove(kpath);

    proto::PiecewiseProto p;
    p.t = 1.2;
    p.s_minus = -0.2;
    p.s_plus = 0.7;
    const TernaryKernel tk = quantize_ternary(X, p);
    const std::string tpath = fs::temp_directory_path() / "mixkern_ternary_test.bin";
    write_ternary(tpath, tk);
    CHECK(fs::file_size(tpath) == 40 + tk.codes.size());
    const TernaryKernel tk2 = read_ternary(tpath);
    CHECK(tk2.n == tk.n);
    CHECK(tk2.t == tk.t);
    CHECK(tk2.r == tk.r);
    CHECK(tk2.scale == tk.scale);
    CHECK(tk2.codes == tk.codes);
    fs::remove(tpath);
}

TEST_SUITE_END();
