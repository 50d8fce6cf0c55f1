#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ipi {

/// Contiguous ownership of `n` items by `R` workers. Block ρ holds
/// floor(n/R)+1 items if ρ < n mod R, else floor(n/R); trailing blocks may be empty.
struct Partition {
    std::size_t worker_count = 1;
    std::vector<std::size_t> block_starts{0, 0};

    std::size_t begin(std::size_t block) const { return block_starts[block]; }
    std::size_t end(std::size_t block) const { return block_starts[block + 1]; }
    std::size_t size(std::size_t block) const { return end(block) - begin(block); }
    std::size_t total() const { return block_starts.back(); }
};

Partition make_partition(std::size_t n, std::size_t workers);

/// Fixed set of in-process workers executing one block-parallel section at a time.
///
/// Worker 0 is the calling thread; workers 1..R-1 are persistent threads. A section
/// returns only after every block finished (the implicit barrier). Sections issued by
/// different threads on the same executor are not supported.
class Executor {
public:
    using BlockFn = std::function<void(std::size_t block, std::size_t begin, std::size_t end)>;

    explicit Executor(std::size_t workers = 1);
    ~Executor();
    Executor(const Executor&) = delete;
    Executor& operator=(const Executor&) = delete;
    Executor(Executor&&) noexcept;
    Executor& operator=(Executor&&) noexcept;

    std::size_t workers() const { return workers_; }

    /// Runs fn once per block of make_partition(n, workers()), including empty blocks.
    void for_blocks(std::size_t n, const BlockFn& fn) const;

    /// Same, over an explicit partition (its worker_count must equal workers()).
    void for_blocks(const Partition& part, const BlockFn& fn) const;

    static const Executor& serial();

private:
    struct Pool;
    std::size_t workers_;
    std::unique_ptr<Pool> pool_;
};

/// Combines per-block partials in a fixed pairwise tree ordered by block index.
double pairwise_sum(std::span<const double> partials);

} // namespace ipi
