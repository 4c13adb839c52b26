#include "finsler/sweep.hpp"

#include <algorithm>
#include <exception>

#include "finsler/rng.hpp"

namespace finsler {

std::uint64_t substream_seed(std::uint64_t master, int i) {
    Rng r(master + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1));
    return r.next_u64();
}

SweepResult sweep_max(int samples, const std::function<double(int)>& f, SweepMode mode) {
    SweepResult out;
    out.samples = samples;
    if (samples <= 0) return out;

    double m;
    if (mode == SweepMode::serial) {
        m = f(0);
        for (int i = 1; i < samples; ++i) m = std::max(m, f(i));
        out.max_value = m;
        return out;
    }

    // index 0 runs alone first: it creates whatever interned jet spaces the
    // evaluation needs, so the workers mostly hit the read path
    m = f(0);
    std::exception_ptr err = nullptr;
    int err_index = samples;
#pragma omp parallel for reduction(max : m) schedule(dynamic)
    for (int i = 1; i < samples; ++i) {
        try {
            m = std::max(m, f(i));
        } catch (...) {
#pragma omp critical(finsler_sweep_err)
            if (i < err_index) {
                err_index = i;
                err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
    out.max_value = m;
    return out;
}

} // namespace finsler
