#include "mixkern/experiments.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

// Standalone benchmark: serial reference vs OpenMP kernels, plus packed
// ternary vs dense eigendecomposition. Usage: mixkern_bench [n p reps].
int main(int argc, char** argv) {
    int n = 1024, p = 2048, reps = 5;
    if (argc >= 3) {
        n = std::atoi(argv[1]);
        p = std::atoi(argv[2]);
    }
    if (argc >= 4) reps = std::atoi(argv[3]);

    const auto r = mixkern::expt::run_bench(n, p, 42, reps, true);

    std::printf("kernel benchmark  n=%d p=%d  (median of %d)\n", r.n, r.p, r.reps);
    std::printf("  %-34s %10.4f s\n", "gram serial reference", r.gram_serial_seconds);
    std::printf("  %-34s %10.4f s  (%.1fx)\n", "gram OpenMP", r.gram_omp_seconds,
                r.gram_serial_seconds / r.gram_omp_seconds);
    std::printf("  %-34s %10.4f s\n", "entrywise map serial", r.map_serial_seconds);
    std::printf("  %-34s %10.4f s  (%.1fx)\n", "entrywise map OpenMP", r.map_omp_seconds,
                r.map_serial_seconds / r.map_omp_seconds);
    std::printf("  %-34s %10.6f s\n", "dense matvec", r.matvec_dense_seconds);
    std::printf("  %-34s %10.6f s\n", "ternary matvec serial",
                r.matvec_ternary_serial_seconds);
    std::printf("  %-34s %10.6f s\n", "ternary matvec OpenMP", r.matvec_ternary_omp_seconds);
    std::printf("  %-34s %10.4f s\n", "ternary top eigenvector (Lanczos)",
                r.ternary_topeig_seconds);
    std::printf("  %-34s %10.4f s\n", "dense eigendecomposition",
                r.dense_eigendecomp_seconds);
    std::printf("  %-34s %10zu B\n", "packed ternary storage", r.ternary_bytes);
    std::printf("  %-34s %10zu B  (%.1fx)\n", "dense float64 storage", r.dense_bytes,
                double(r.dense_bytes) / double(r.ternary_bytes));
    return 0;
}
