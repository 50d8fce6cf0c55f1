#include "ipi/parallel.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <span>
#include <thread>

#include "ipi/errors.hpp"

namespace ipi {

Partition make_partition(std::size_t n, std::size_t workers) {
    if (workers == 0) {
        throw ValidationError("make_partition: worker count must be at least 1");
    }
    Partition part;
    part.worker_count = workers;
    part.block_starts.assign(workers + 1, 0);
    const std::size_t base = n / workers;
    const std::size_t extra = n % workers;
    for (std::size_t rho = 0; rho < workers; ++rho) {
        const std::size_t size = rho < extra ? base + 1 : base;
        part.block_starts[rho + 1] = part.block_starts[rho] + size;
    }
    return part;
}

double pairwise_sum(std::span<const double> partials) {
    if (partials.empty()) {
        return 0.0;
    }
    if (partials.size() == 1) {
        return partials[0];
    }
    const std::size_t half = partials.size() / 2;
    return pairwise_sum(partials.first(half)) + pairwise_sum(partials.subspan(half));
}

struct Executor::Pool {
    explicit Pool(std::size_t workers) {
        threads.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            threads.emplace_back([this, w] { worker_loop(w); });
        }
    }

    ~Pool() {
        {
            std::lock_guard lock(mutex);
            stopping = true;
        }
        start_cv.notify_all();
        for (auto& t : threads) {
            t.join();
        }
    }

    void run(const Partition& part, const BlockFn& fn) {
        {
            std::lock_guard lock(mutex);
            task = &fn;
            partition = &part;
            pending = threads.size();
            error = nullptr;
            ++generation;
        }
        start_cv.notify_all();

        std::exception_ptr own_error;
        try {
            fn(0, part.begin(0), part.end(0));
        } catch (...) {
            own_error = std::current_exception();
        }

        std::unique_lock lock(mutex);
        done_cv.wait(lock, [this] { return pending == 0; });
        task = nullptr;
        partition = nullptr;
        if (own_error) {
            std::rethrow_exception(own_error);
        }
        if (error) {
            std::rethrow_exception(error);
        }
    }

    void worker_loop(std::size_t block) {
        std::uint64_t seen = 0;
        while (true) {
            const BlockFn* fn = nullptr;
            const Partition* part = nullptr;
            {
                std::unique_lock lock(mutex);
                start_cv.wait(lock, [&] { return stopping || generation != seen; });
                if (stopping) {
                    return;
                }
                seen = generation;
                fn = task;
                part = partition;
            }
            std::exception_ptr local;
            try {
                (*fn)(block, part->begin(block), part->end(block));
            } catch (...) {
                local = std::current_exception();
            }
            {
                std::lock_guard lock(mutex);
                if (local && !error) {
                    error = local;
                }
                if (--pending == 0) {
                    done_cv.notify_one();
                }
            }
        }
    }

    std::vector<std::thread> threads;
    std::mutex mutex;
    std::condition_variable start_cv;
    std::condition_variable done_cv;
    const BlockFn* task = nullptr;
    const Partition* partition = nullptr;
    std::size_t pending = 0;
    std::uint64_t generation = 0;
    bool stopping = false;
    std::exception_ptr error;
};

Executor::Executor(std::size_t workers) : workers_(workers) {
    if (workers == 0) {
        throw ValidationError("Executor: worker count must be at least 1");
    }
    if (workers > 1) {
        pool_ = std::make_unique<Pool>(workers);
    }
}

Executor::~Executor() = default;
Executor::Executor(Executor&&) noexcept = default;
Executor& Executor::operator=(Executor&&) noexcept = default;

void Executor::for_blocks(std::size_t n, const BlockFn& fn) const {
    for_blocks(make_partition(n, workers_), fn);
}

void Executor::for_blocks(const Partition& part, const BlockFn& fn) const {
    if (part.worker_count != workers_) {
        throw ValidationError("Executor::for_blocks: partition worker count does not match executor");
    }
    if (!pool_) {
        fn(0, part.begin(0), part.end(0));
        return;
    }
    pool_->run(part, fn);
}

const Executor& Executor::serial() {
    static const Executor instance(1);
    return instance;
}

} // namespace ipi
