// Process-wide thread cap for the OpenMP kernels. Every parallel section
// assigns whole output entries (rows, channels, clips) to threads, so any
// thread count produces bit-identical results to the serial reference.
#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace eev {

// Caps OpenMP parallelism; n < 1 is clamped to 1.
void set_threads(int n);

// Current cap; 1 means serial.
int threads();

// Exceptions may not escape an OpenMP region; loop bodies that can throw
// capture into their slot and the caller rethrows the first by index.
class ParallelErrors {
public:
    explicit ParallelErrors(std::size_t slots) : errors_(slots) {}

    void capture(std::size_t slot) { errors_[slot] = std::current_exception(); }

    void rethrow_first() const {
        for (const auto& e : errors_) {
            if (e) std::rethrow_exception(e);
        }
    }

private:
    std::vector<std::exception_ptr> errors_;
};

}  // namespace eev
