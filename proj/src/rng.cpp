#include "paat/rng.hpp"

#include <algorithm>

namespace paat {

std::vector<std::size_t> Rng::sampleWithout(std::size_t n, std::size_t k) {
    // Partial Fisher-Yates over an index pool; fine at corpus-spec sizes.
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k && i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

}  // namespace paat
