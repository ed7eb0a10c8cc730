#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wcsph/error.hpp"

namespace wcsph {

/// Serial or fork-join parallel execution of per-particle loops.
struct ExecPolicy {
    enum class Mode { Serial, Parallel };

    Mode mode = Mode::Serial;
    int worker_count = 1;

    static ExecPolicy serial() { return {}; }
    static ExecPolicy parallel(int workers) {
        if (workers < 1) throw InvalidInput("worker_count must be >= 1");
        return {Mode::Parallel, workers};
    }
    /// Reads SPH_WORKERS; unset or empty means serial.
    static ExecPolicy from_environment() {
        const char* env = std::getenv("SPH_WORKERS");
        if (env == nullptr || *env == '\0') return serial();
        int n = 0;
        try {
            n = std::stoi(env);
        } catch (const std::exception&) {
            throw InvalidInput(std::string("SPH_WORKERS is not an integer: ") + env);
        }
        return n <= 1 ? serial() : parallel(n);
    }

    bool is_serial() const noexcept { return mode == Mode::Serial; }
    int workers() const noexcept { return is_serial() ? 1 : worker_count; }
};

/// Owns the worker threads for a Parallel policy. Work is split into
/// `workers()` contiguous index blocks; block 0 runs on the calling thread.
/// Every call is a fork-join: on return all writes made by the body are
/// visible to the caller.
class Executor {
public:
    explicit Executor(ExecPolicy policy = ExecPolicy::serial()) : policy_(policy) {
        if (policy_.workers() > 1) pool_ = std::make_unique<Pool>(policy_.workers() - 1);
    }

    const ExecPolicy& policy() const noexcept { return policy_; }
    bool is_serial() const noexcept { return policy_.is_serial(); }
    int workers() const noexcept { return policy_.workers(); }

    /// Calls body(begin, end, block) once per contiguous block of [0, n).
    template <class Body>
    void for_each_block(std::size_t n, Body&& body) const {
        if (n == 0) return;
        const int blocks = static_cast<int>(std::min<std::size_t>(workers(), n));
        if (blocks <= 1 || !pool_) {
            body(std::size_t{0}, n, 0);
            return;
        }
        auto range = [n, blocks](int b) {
            const std::size_t begin = n * static_cast<std::size_t>(b) / blocks;
            const std::size_t end = n * static_cast<std::size_t>(b + 1) / blocks;
            return std::pair{begin, end};
        };
        pool_->run(blocks, [&](int b) {
            auto [begin, end] = range(b);
            body(begin, end, b);
        });
    }

    /// Block boundaries used by for_each_block for the given n.
    std::vector<std::size_t> block_offsets(std::size_t n) const {
        const int blocks = n == 0 ? 1 : static_cast<int>(std::min<std::size_t>(workers(), n));
        std::vector<std::size_t> off(blocks + 1);
        for (int b = 0; b <= blocks; ++b) off[b] = n * static_cast<std::size_t>(b) / blocks;
        return off;
    }

private:
    class Pool {
    public:
        explicit Pool(int helpers) {
            threads_.reserve(helpers);
            for (int t = 0; t < helpers; ++t) threads_.emplace_back([this, t] { loop(t + 1); });
        }

        ~Pool() {
            {
                std::lock_guard lock(mutex_);
                stop_ = true;
            }
            wake_.notify_all();
            for (auto& t : threads_) t.join();
        }

        Pool(const Pool&) = delete;
        Pool& operator=(const Pool&) = delete;

        void run(int blocks, const std::function<void(int)>& job) {
            std::lock_guard serialize(submit_mutex_);
            {
                std::lock_guard lock(mutex_);
                job_ = &job;
                blocks_ = blocks;
                pending_ = blocks - 1;
                error_ = nullptr;
                ++generation_;
            }
            wake_.notify_all();
            guarded(job, 0);
            std::unique_lock lock(mutex_);
            done_.wait(lock, [this] { return pending_ == 0; });
            job_ = nullptr;
            if (error_) std::rethrow_exception(error_);
        }

    private:
        void guarded(const std::function<void(int)>& job, int block) {
            try {
                job(block);
            } catch (...) {
                std::lock_guard lock(mutex_);
                if (!error_) error_ = std::current_exception();
            }
        }

        void loop(int block) {
            std::uint64_t seen = 0;
            for (;;) {
                const std::function<void(int)>* job = nullptr;
                {
                    std::unique_lock lock(mutex_);
                    wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
                    if (stop_) return;
                    seen = generation_;
                    if (block >= blocks_) continue;
                    job = job_;
                }
                guarded(*job, block);
                {
                    std::lock_guard lock(mutex_);
                    if (--pending_ == 0) done_.notify_one();
                }
            }
        }

        std::vector<std::thread> threads_;
        std::mutex submit_mutex_;
        std::mutex mutex_;
        std::condition_variable wake_;
        std::condition_variable done_;
        const std::function<void(int)>* job_ = nullptr;
        int blocks_ = 0;
        int pending_ = 0;
        std::uint64_t generation_ = 0;
        bool stop_ = false;
        std::exception_ptr error_;
    };

    ExecPolicy policy_;
    std::unique_ptr<Pool> pool_;
};

/// Invokes body(i) exactly once for every i in [0, n). The body must write
/// only state owned by index i. An exception from any body is rethrown after
/// all blocks have stopped; the other blocks bail out at their next index.
template <class Body>
void parallel_for_particles(std::size_t n, const Executor& exec, Body&& body) {
    std::atomic<bool> failed{false};
    exec.for_each_block(n, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            if (failed.load(std::memory_order_relaxed)) return;
            try {
                body(i);
            } catch (...) {
                failed.store(true, std::memory_order_relaxed);
                throw;
            }
        }
    });
}

}  // namespace wcsph
