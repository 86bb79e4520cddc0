#pragma once

#include "mixkern/hermite.hpp"
#include "mixkern/prototype.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mixkern::kernel {

// Dense symmetric kernel with zeroed diagonal: K_ij = f(x_i^T x_j / sqrt p)/sqrt p.
struct KernelMatrix {
    int n = 0;
    Mat data;
};

// G = X^T X / sqrt(p). OpenMP over tile pairs; the tiling is independent of
// the thread count so results are run-to-run identical.
Mat gram(const Mat& X);
Mat gram_serial(const Mat& X);  // reference triple loop, kept for testing

KernelMatrix build_kernel(const Mat& X, const hermite::KernelFunc& f);
KernelMatrix build_kernel_serial(const Mat& X, const hermite::KernelFunc& f);
// Null model: same construction applied to the noise matrix.
KernelMatrix build_null_kernel(const Mat& Z, const hermite::KernelFunc& f);

// map f over a precomputed Gram (shared across functions on the same data)
KernelMatrix apply_kernel_func(const Mat& gram_matrix, const hermite::KernelFunc& f, int p);

// 2-bit packed ternary kernel. Upper triangle in row-major triangular order
// k = i*n - i(i+1)/2 + (j-i-1); entry k sits at bits (2k mod 8) of byte k/4.
// Codes: 0 -> 0, 1 -> +t, 2 -> -r*t (t carries the sign flip when present),
// all scaled by scale = 1/sqrt(p).
struct TernaryKernel {
    int n = 0;
    double t = 1.0;
    double r = 1.0;
    double scale = 1.0;
    std::vector<uint8_t> codes;

    static size_t entry_count(int n) { return size_t(n) * (n - 1) / 2; }
    static size_t packed_bytes(int n) { return (entry_count(n) * 2 + 7) / 8; }
    static size_t triangle_index(int n, int i, int j);  // requires i < j

    uint8_t code_at(size_t k) const { return (codes[k >> 2] >> ((2 * k) & 7)) & 3u; }
    void set_code(size_t k, uint8_t code) {
        const size_t byte = k >> 2;
        const int shift = (2 * k) & 7;
        codes[byte] = static_cast<uint8_t>((codes[byte] & ~(3u << shift)) | (code << shift));
    }

    double level(uint8_t code) const {
        if (code == 1) return t * scale;
        if (code == 2) return -(r * t) * scale;
        return 0.0;
    }
    double value_at(int i, int j) const;  // symmetric, zero diagonal
    size_t bytes() const { return codes.size() + 40; }  // header: magic,n,t,r,scale
    Mat dense() const;
};

// Compare G entries against sqrt(2)*s-/s+ with the closed/open boundary
// conventions of the three-branch prototype; decompression is bit-exact
// against build_kernel with the same piecewise function.
TernaryKernel quantize_ternary(const Mat& X, const proto::PiecewiseProto& p);
TernaryKernel quantize_from_gram(const Mat& gram_matrix, const proto::PiecewiseProto& p, int dim_p);

// out = K v via two masked partial sums per row (one per nonzero level).
void ternary_matvec(const TernaryKernel& tk, const double* v, double* out);
void ternary_matvec_serial(const TernaryKernel& tk, const double* v, double* out);
Vec ternary_matvec(const TernaryKernel& tk, const Vec& v);

// flat binary formats
void write_kernel(const std::string& path, const KernelMatrix& k);
KernelMatrix read_kernel(const std::string& path);
void write_ternary(const std::string& path, const TernaryKernel& tk);
TernaryKernel read_ternary(const std::string& path);

}  // namespace mixkern::kernel
