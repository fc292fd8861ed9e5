#include "pihier/names.hpp"

namespace pihier {

std::uint64_t next_name_uid() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

} // namespace pihier
