#pragma once

#include <exception>
#include <mutex>

namespace hieropo {

/// Number of OpenMP threads used by the parallel kernels. 0 restores the
/// runtime default (machine parallelism).
void set_num_threads(int n);
int num_threads();

/// Exceptions must not leave an OpenMP region. Wrap loop bodies with run()
/// and call rethrow() after the region; the first captured exception wins.
class ExceptionCollector {
public:
    template <class F>
    void run(F&& body) noexcept
    {
        try {
            body();
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_)
                error_ = std::current_exception();
        }
    }

    void rethrow() const
    {
        if (error_)
            std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

} // namespace hieropo
