// Serial vs OpenMP kernel benchmark. Sizes mirror the shapes the training
// loop actually runs (batched node features, adjacency mixing, softmax).

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "hv/kernels.hpp"

using hv::Matrix;
using hv::Rng;
namespace k = hv::kernels;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm-up
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, double check) {
    std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   [max|d|=%.1e]\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms, check);
}

} // namespace

int main() {
#if defined(_OPENMP)
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP\n");
#endif
    Rng rng(12345);
    const int reps = 20;

    { // dense matmul at training-step scale
        Matrix a = Matrix::uniform(768, 256, rng, -1, 1);
        Matrix b = Matrix::uniform(256, 256, rng, -1, 1);
        Matrix out_s, out_p;
        double ts = time_ms([&] { k::serial::matmul(a, b, out_s); }, reps);
        double tp = time_ms([&] { k::matmul(a, b, out_p); }, reps);
        report("matmul 768x256 * 256x256", ts, tp, hv::max_abs_diff(out_s, out_p));
    }
    { // batched adjacency application (64 samples x 6 nodes)
        Matrix adj = Matrix::uniform(6, 6, rng, 0, 1);
        Matrix z = Matrix::uniform(64 * 6, 512, rng, -1, 1);
        Matrix out_s, out_p;
        double ts = time_ms([&] { k::serial::adj_mix(adj, z, 6, out_s); }, reps);
        double tp = time_ms([&] { k::adj_mix(adj, z, 6, out_p); }, reps);
        report("adj_mix 64x6 nodes, d=512", ts, tp, hv::max_abs_diff(out_s, out_p));
    }
    { // row softmax over many small rows
        Matrix x = Matrix::uniform(20000, 64, rng, -4, 4);
        Matrix out_s, out_p;
        double ts = time_ms([&] { k::serial::row_softmax(x, out_s); }, reps);
        double tp = time_ms([&] { k::row_softmax(x, out_p); }, reps);
        report("row_softmax 20000x64", ts, tp, hv::max_abs_diff(out_s, out_p));
    }
    { // wide matmul (attention projections over a stacked sequence)
        Matrix a = Matrix::uniform(12 * 384, 32, rng, -1, 1);
        Matrix b = Matrix::uniform(32, 32, rng, -1, 1);
        Matrix out_s, out_p;
        double ts = time_ms([&] { k::serial::matmul(a, b, out_s); }, reps);
        double tp = time_ms([&] { k::matmul(a, b, out_p); }, reps);
        report("matmul 4608x32 * 32x32", ts, tp, hv::max_abs_diff(out_s, out_p));
    }
    return 0;
}
