#include "mixkern/kernel.hpp"

#include <cmath>
#include <fstream>

namespace mixkern::kernel {

namespace {

constexpr uint64_t kKernelMagic = 0x4d4b4b45524e3031ULL;   // "MKKERN01"
constexpr uint64_t kTernaryMagic = 0x4d4b5445524e3031ULL;  // "MKTERN01"
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr int kTile = 128;

}  // namespace

Mat gram(const Mat& X) {
    const int p = static_cast<int>(X.rows());
    const int n = static_cast<int>(X.cols());
    if (p < 1 || n < 1) throw std::invalid_argument("gram: empty matrix");
    const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
    Mat G(n, n);

    const int tiles = (n + kTile - 1) / kTile;
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(size_t(tiles) * (tiles + 1) / 2);
    for (int bi = 0; bi < tiles; ++bi)
        for (int bj = bi; bj < tiles; ++bj) pairs.emplace_back(bi, bj);

#pragma omp parallel for schedule(dynamic)
    for (size_t idx = 0; idx < pairs.size(); ++idx) {
        const int i0 = pairs[idx].first * kTile;
        const int j0 = pairs[idx].second * kTile;
        const int ilen = std::min(kTile, n - i0);
        const int jlen = std::min(kTile, n - j0);
        G.block(i0, j0, ilen, jlen).noalias() =
            X.middleCols(i0, ilen).transpose() * X.middleCols(j0, jlen);
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double v = G(i, j) * inv_sqrt_p;
            G(i, j) = v;
            G(j, i) = v;
        }
    }
    return G;
}

Mat gram_serial(const Mat& X) {
    const int p = static_cast<int>(X.rows());
    const int n = static_cast<int>(X.cols());
    if (p < 1 || n < 1) throw std::invalid_argument("gram: empty matrix");
    const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
    Mat G(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            const double* xi = X.col(i).data();
            const double* xj = X.col(j).data();
            for (int k = 0; k < p; ++k) acc += xi[k] * xj[k];
            const double v = acc * inv_sqrt_p;
            G(i, j) = v;
            G(j, i) = v;
        }
    }
    return G;
}

KernelMatrix apply_kernel_func(const Mat& gram_matrix, const hermite::KernelFunc& f, int p) {
    const int n = static_cast<int>(gram_matrix.rows());
    if (gram_matrix.cols() != n) throw std::invalid_argument("apply_kernel_func: G not square");
    const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
    KernelMatrix k;
    k.n = n;
    k.data.resize(n, n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = f(gram_matrix(i, j)) * inv_sqrt_p;
            k.data(i, j) = v;
            k.data(j, i) = v;
        }
        k.data(i, i) = 0.0;
    }
    return k;
}

KernelMatrix build_kernel(const Mat& X, const hermite::KernelFunc& f) {
    return apply_kernel_func(gram(X), f, static_cast<int>(X.rows()));
}

KernelMatrix build_kernel_serial(const Mat& X, const hermite::KernelFunc& f) {
    const int p = static_cast<int>(X.rows());
    const Mat G = gram_serial(X);
    const int n = static_cast<int>(G.rows());
    const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(p));
    KernelMatrix k;
    k.n = n;
    k.data.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = f(G(i, j)) * inv_sqrt_p;
            k.data(i, j) = v;
            k.data(j, i) = v;
        }
        k.data(i, i) = 0.0;
    }
    return k;
}

KernelMatrix build_null_kernel(const Mat& Z, const hermite::KernelFunc& f) {
    return build_kernel(Z, f);
}

size_t TernaryKernel::triangle_index(int n, int i, int j) {
    return size_t(i) * n - size_t(i) * (i + 1) / 2 + size_t(j - i - 1);
}

double TernaryKernel::value_at(int i, int j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return level(code_at(triangle_index(n, i, j)));
}

Mat TernaryKernel::dense() const {
    Mat m = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = level(code_at(triangle_index(n, i, j)));
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

TernaryKernel quantize_from_gram(const Mat& gram_matrix, const proto::PiecewiseProto& p,
                                 int dim_p) {
    p.validate();
    const int n = static_cast<int>(gram_matrix.rows());
    TernaryKernel tk;
    tk.n = n;
    tk.t = p.sign_flip ? -p.t : p.t;
    tk.r = p.r();
    tk.scale = 1.0 / std::sqrt(static_cast<double>(dim_p));
    tk.codes.assign(TernaryKernel::packed_bytes(n), 0);
    const double lo = kSqrt2 * p.s_minus;
    const double hi = kSqrt2 * p.s_plus;

    // classify into one byte per entry first: packed bytes straddle row
    // boundaries, so writing 2-bit codes in-place from parallel rows would race
    const size_t entries = TernaryKernel::entry_count(n);
    std::vector<uint8_t> flat(entries, 0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        size_t k = i + 1 < n ? TernaryKernel::triangle_index(n, i, i + 1) : 0;
        for (int j = i + 1; j < n; ++j, ++k) {
            const double g = gram_matrix(i, j);
            if (g <= lo)
                flat[k] = 2;  // lower branch: -r*t
            else if (g > hi)
                flat[k] = 1;  // upper branch: +t
        }
    }
#pragma omp parallel for schedule(static)
    for (size_t byte = 0; byte < tk.codes.size(); ++byte) {
        uint8_t packed = 0;
        const size_t base = byte * 4;
        for (size_t off = 0; off < 4 && base + off < entries; ++off)
            packed = static_cast<uint8_t>(packed | (flat[base + off] << (2 * off)));
        tk.codes[byte] = packed;
    }
    return tk;
}

TernaryKernel quantize_ternary(const Mat& X, const proto::PiecewiseProto& p) {
    return quantize_from_gram(gram(X), p, static_cast<int>(X.rows()));
}

namespace {

// One row of the packed triangle: entries j > i are contiguous starting at
// triangle_index(n, i, i+1); entries j < i are strided lookups.
inline void row_partial_sums(const TernaryKernel& tk, int i, const double* v, double& plus,
                             double& minus) {
    const int n = tk.n;
    plus = 0.0;
    minus = 0.0;
    for (int j = 0; j < i; ++j) {
        const uint8_t code = tk.code_at(TernaryKernel::triangle_index(n, j, i));
        if (code == 1)
            plus += v[j];
        else if (code == 2)
            minus += v[j];
    }
    size_t k = TernaryKernel::triangle_index(n, i, i + 1);
    for (int j = i + 1; j < n; ++j, ++k) {
        const uint8_t code = tk.code_at(k);
        if (code == 1)
            plus += v[j];
        else if (code == 2)
            minus += v[j];
    }
}

}  // namespace

void ternary_matvec(const TernaryKernel& tk, const double* v, double* out) {
    const double plus_level = tk.t * tk.scale;
    const double minus_level = -(tk.r * tk.t) * tk.scale;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < tk.n; ++i) {
        double plus, minus;
        row_partial_sums(tk, i, v, plus, minus);
        out[i] = plus_level * plus + minus_level * minus;
    }
}

void ternary_matvec_serial(const TernaryKernel& tk, const double* v, double* out) {
    const double plus_level = tk.t * tk.scale;
    const double minus_level = -(tk.r * tk.t) * tk.scale;
    for (int i = 0; i < tk.n; ++i) {
        double plus, minus;
        row_partial_sums(tk, i, v, plus, minus);
        out[i] = plus_level * plus + minus_level * minus;
    }
}

Vec ternary_matvec(const TernaryKernel& tk, const Vec& v) {
    if (v.size() != tk.n) throw std::invalid_argument("ternary_matvec: length mismatch");
    Vec out(tk.n);
    ternary_matvec(tk, v.data(), out.data());
    return out;
}

void write_kernel(const std::string& path, const KernelMatrix& k) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    const uint64_t magic = kKernelMagic;
    const uint64_t n = static_cast<uint64_t>(k.n);
    out.write(reinterpret_cast<const char*>(&magic), 8);
    out.write(reinterpret_cast<const char*>(&n), 8);
    std::vector<double> row(k.n);
    for (int i = 0; i < k.n; ++i) {
        for (int j = 0; j < k.n; ++j) row[j] = k.data(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(8 * row.size()));
    }
}

KernelMatrix read_kernel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    uint64_t magic = 0, n = 0;
    in.read(reinterpret_cast<char*>(&magic), 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    if (magic != kKernelMagic) throw std::runtime_error("bad kernel magic in " + path);
    KernelMatrix k;
    k.n = static_cast<int>(n);
    k.data.resize(k.n, k.n);
    std::vector<double> row(k.n);
    for (int i = 0; i < k.n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(8 * row.size()));
        for (int j = 0; j < k.n; ++j) k.data(i, j) = row[j];
    }
    if (!in) throw std::runtime_error("truncated kernel file: " + path);
    return k;
}

void write_ternary(const std::string& path, const TernaryKernel& tk) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    const uint64_t magic = kTernaryMagic;
    const uint64_t n = static_cast<uint64_t>(tk.n);
    out.write(reinterpret_cast<const char*>(&magic), 8);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&tk.t), 8);
    out.write(reinterpret_cast<const char*>(&tk.r), 8);
    out.write(reinterpret_cast<const char*>(&tk.scale), 8);
    out.write(reinterpret_cast<const char*>(tk.codes.data()),
              static_cast<std::streamsize>(tk.codes.size()));
}

TernaryKernel read_ternary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    uint64_t magic = 0, n = 0;
    TernaryKernel tk;
    in.read(reinterpret_cast<char*>(&magic), 8);
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&tk.t), 8);
    in.read(reinterpret_cast<char*>(&tk.r), 8);
    in.read(reinterpret_cast<char*>(&tk.scale), 8);
    if (magic != kTernaryMagic) throw std::runtime_error("bad ternary magic in " + path);
    tk.n = static_cast<int>(n);
    tk.codes.resize(TernaryKernel::packed_bytes(tk.n));
    in.read(reinterpret_cast<char*>(tk.codes.data()),
            static_cast<std::streamsize>(tk.codes.size()));
    if (!in) throw std::runtime_error("truncated ternary file: " + path);
    return tk;
}

}  // namespace mixkern::kernel
