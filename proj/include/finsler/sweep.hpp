#ifndef FINSLER_SWEEP_HPP
#define FINSLER_SWEEP_HPP

#include <cstdint>
#include <functional>

namespace finsler {

// Max-reduction over independently evaluated samples.  Each index derives its
// own random substream, so the result does not depend on the execution order
// and the parallel and serial modes produce identical doubles.
enum class SweepMode { serial, parallel };

struct SweepResult {
    double max_value = 0;
    int samples = 0;
};

// f(i) must be pure given the index.  Exceptions are rethrown after the loop;
// when several indices throw, the lowest index wins, in both modes.
SweepResult sweep_max(int samples, const std::function<double(int)>& f,
                      SweepMode mode = SweepMode::parallel);

// Stable per-index seed under a master seed.
std::uint64_t substream_seed(std::uint64_t master, int i);

} // namespace finsler

#endif
