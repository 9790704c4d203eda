// Compares the serial reference kernels against their OpenMP variants on the
// shapes the training loop actually uses, and checks that both produce
// bit-identical results.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mmal/kernels.hpp"
#include "mmal/perlin.hpp"
#include "mmal/rng.hpp"

using namespace mmal;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now();
        fn();
        best = std::min(best, now() - t0);
    }
    return best;
}

std::vector<float> random_matrix(std::size_t n, std::uint64_t seed) {
    std::vector<float> m(n);
    Rng rng(seed);
    for (float& v : m) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return m;
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n) {
    const std::vector<float> a = random_matrix(m * k, 1);
    const std::vector<float> b = random_matrix(k * n, 2);
    std::vector<float> c_serial(m * n), c_omp(m * n);

    const double flops = 2.0 * m * k * n;
    const double ts = time_best_of(3, [&] {
        kernels::matmul_serial(a.data(), b.data(), c_serial.data(), m, k, n);
    });
    const double tp = time_best_of(3, [&] {
        kernels::matmul(a.data(), b.data(), c_omp.data(), m, k, n);
    });
    const bool identical = std::memcmp(c_serial.data(), c_omp.data(),
                                       c_serial.size() * sizeof(float)) == 0;

    std::printf("matmul %4zux%4zux%4zu  serial %8.2f ms (%6.2f GF/s)  omp %8.2f ms (%6.2f GF/s)"
                "  speedup %.2fx  bitwise %s\n",
                m, k, n, ts * 1e3, flops / ts * 1e-9, tp * 1e3, flops / tp * 1e-9, ts / tp,
                identical ? "equal" : "DIFFER");
}

void bench_min_dist(std::size_t n, std::size_t dim) {
    const std::vector<float> pts = random_matrix(n * dim, 3);
    const std::vector<float> center = random_matrix(dim, 4);
    std::vector<float> d_serial(n, 1e30f), d_omp(n, 1e30f);

    const double ts = time_best_of(5, [&] {
        std::fill(d_serial.begin(), d_serial.end(), 1e30f);
        kernels::min_dist_update_serial(pts.data(), n, dim, center.data(), d_serial.data());
    });
    const double tp = time_best_of(5, [&] {
        std::fill(d_omp.begin(), d_omp.end(), 1e30f);
        kernels::min_dist_update(pts.data(), n, dim, center.data(), d_omp.data());
    });
    const bool identical =
        std::memcmp(d_serial.data(), d_omp.data(), n * sizeof(float)) == 0;
    std::printf("min_dist %6zu x %4zu     serial %8.2f ms              omp %8.2f ms"
                "              speedup %.2fx  bitwise %s\n",
                n, dim, ts * 1e3, tp * 1e3, ts / tp, identical ? "equal" : "DIFFER");
}

void bench_perlin(int side) {
    const double t = time_best_of(3, [&] { perlin_field(side, side, 4.0, 2, 42); });
    std::printf("perlin %5dx%-5d        %8.2f ms\n", side, side, t * 1e3);
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; parallel kernels run serially\n");
#endif

    bench_matmul(128, 768, 256);
    bench_matmul(128, 256, 64);
    bench_matmul(512, 768, 256);
    bench_matmul(1024, 256, 256);
    bench_min_dist(5000, 64);
    bench_min_dist(50000, 64);
    bench_perlin(64);
    bench_perlin(512);
    return 0;
}
