#pragma once

// Thin FFTW wrapper. Plans are created under a process-wide mutex (the FFTW
// planner is not thread safe); execution is per workspace, so one workspace
// per worker thread is safe. FFTW_ESTIMATE and aligned buffers keep the
// chosen algorithm, and therefore the rounding, identical from run to run.

#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace fracscale {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

class FftWorkspace {
public:
    explicit FftWorkspace(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("FftWorkspace: size must be positive");
        buf_ = fftw_alloc_complex(n);
        if (!buf_) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        const int ni = static_cast<int>(n);
        forward_ = fftw_plan_dft_1d(ni, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(ni, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    FftWorkspace(const FftWorkspace&) = delete;
    FftWorkspace& operator=(const FftWorkspace&) = delete;
    ~FftWorkspace() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(buf_);
    }

    std::size_t size() const { return n_; }
    std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buf_); }
    const std::complex<double>* data() const { return reinterpret_cast<const std::complex<double>*>(buf_); }
    std::complex<double>& operator[](std::size_t i) { return data()[i]; }

    // Unnormalised: backward(forward(v)) == n * v.
    void forward() { fftw_execute(forward_); }
    void backward() { fftw_execute(backward_); }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Angular frequency of DFT bin k for an n-point transform with spacing dx.
// The Nyquist bin (k = n/2, n even) is reported as +pi/dx.
inline double bin_frequency(std::size_t k, std::size_t n, double dx) {
    const double two_pi = 6.283185307179586476925286766559;
    const long long kk = k <= n / 2 ? static_cast<long long>(k) : static_cast<long long>(k) - static_cast<long long>(n);
    return two_pi * static_cast<double>(kk) / (static_cast<double>(n) * dx);
}

} // namespace fracscale
