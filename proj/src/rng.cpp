#include "gca/rng.hpp"

#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca {

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
    char buf[16];
    for (int i = 0; i < 16; ++i) buf[i] = static_cast<char>((root >> (4 * i)) & 0xf);
    std::uint64_t h = fnv1a(std::string_view(buf, 16));
    return fnv1a(stage, h);
}

std::size_t Rng::next_index(std::size_t n) {
    if (n == 0) throw Error("Rng::next_index: empty range");
    auto idx = static_cast<std::size_t>(next_double() * static_cast<double>(n));
    return idx >= n ? n - 1 : idx;
}

std::size_t Rng::next_weighted(const std::vector<double>& weights) {
    if (weights.empty()) throw Error("Rng::next_weighted: empty weights");
    double total = 0.0;
    for (double w : weights) total += w > 0 ? w : 0.0;
    if (total <= 0.0) return next_index(weights.size());
    double x = next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i] > 0 ? weights[i] : 0.0;
        if (x < cum) return i;
    }
    return weights.size() - 1;
}

}  // namespace gca
