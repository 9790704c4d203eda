#pragma once

#include <cstddef>
#include <vector>

// Data-parallel inner loops. Each kernel has a serial reference twin used by
// the tests and the benchmark; the OpenMP variants compute every output
// element with the same accumulation order as the reference, so results are
// bit-identical for any thread count.

namespace mmal::kernels {

// c[m x n] = a[m x k] * b[k x n]
template <typename T>
void matmul_serial(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] = T{0};
        const T* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = ai[p];
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
    for (std::size_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] = T{0};
        const T* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = ai[p];
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// c[m x n] = a[m x k] * b^T where b is given row-major [n x k]
template <typename T>
void matmul_bt_serial(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* bj = b + j * k;
            T acc{0};
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            c[i * n + j] = acc;
        }
    }
}

template <typename T>
void matmul_bt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* bj = b + j * k;
            T acc{0};
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            c[i * n + j] = acc;
        }
    }
}

// c[k x n] += a^T * b where a is given row-major [m x k], b is [m x n].
// Parallel over output rows; the reduction over m stays inside one thread.
template <typename T>
void matmul_at_add_serial(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                          std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        T* cp = c + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const T av = a[i * k + p];
            const T* bi = b + i * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
        }
    }
}

template <typename T>
void matmul_at_add(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
    for (std::size_t p = 0; p < k; ++p) {
        T* cp = c + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const T av = a[i * k + p];
            const T* bi = b + i * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
        }
    }
}

// For every candidate, shrink its distance-to-cover given a new center.
// Used by the greedy k-center strategy.
template <typename T>
void min_dist_update_serial(const T* points, std::size_t n, std::size_t dim, const T* center,
                            T* min_sq_dist) {
    for (std::size_t i = 0; i < n; ++i) {
        const T* pi = points + i * dim;
        T acc{0};
        for (std::size_t d = 0; d < dim; ++d) {
            const T diff = pi[d] - center[d];
            acc += diff * diff;
        }
        if (acc < min_sq_dist[i]) min_sq_dist[i] = acc;
    }
}

template <typename T>
void min_dist_update(const T* points, std::size_t n, std::size_t dim, const T* center,
                     T* min_sq_dist) {
#pragma omp parallel for schedule(static) if (n * dim > 16384)
    for (std::size_t i = 0; i < n; ++i) {
        const T* pi = points + i * dim;
        T acc{0};
        for (std::size_t d = 0; d < dim; ++d) {
            const T diff = pi[d] - center[d];
            acc += diff * diff;
        }
        if (acc < min_sq_dist[i]) min_sq_dist[i] = acc;
    }
}

} // namespace mmal::kernels
