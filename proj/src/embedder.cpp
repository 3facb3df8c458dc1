#include "gca/embedder.hpp"

#include <cmath>

#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca {

std::vector<std::vector<float>> HashingEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw BackendError("embed: no texts given");
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (text.empty()) throw BackendError("embed: empty text");
        std::vector<float> vec(static_cast<size_t>(dim_), 0.0f);
        const std::string lowered = to_lower(text);
        for (int n = 1; n <= 4; ++n) {
            if (lowered.size() < static_cast<size_t>(n)) break;
            for (size_t i = 0; i + n <= lowered.size(); ++i) {
                const std::uint64_t h = fnv1a(std::string_view(lowered).substr(i, n));
                const auto bucket = static_cast<size_t>(h % static_cast<std::uint64_t>(dim_));
                const float sign = ((h >> 32) & 1) ? 1.0f : -1.0f;
                vec[bucket] += sign;
            }
        }
        double norm = 0.0;
        for (float v : vec) norm += static_cast<double>(v) * v;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (float& v : vec) v = static_cast<float>(v / norm);
        } else {
            vec[0] = 1.0f;  // degenerate text still gets a unit vector
        }
        out.push_back(std::move(vec));
    }
    return out;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size() || a.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::shared_ptr<Embedder> make_test_embedder() {
    return std::make_shared<HashingEmbedder>();
}

}  // namespace gca
