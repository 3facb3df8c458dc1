#pragma once

#include <memory>
#include <string>
#include <vector>

namespace gca {

// Text embedding backend. Vectors are L2-normalized and share one dimension;
// results must be deterministic per backend id.
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
    virtual int dimension() const = 0;
    virtual std::string id() const = 0;
};

// Offline embedder: feature-hashed character n-grams (n = 1..4) over a fixed
// 256-dimensional space with signed buckets. Deterministic across runs and
// platforms, so retrieval tests need no network.
class HashingEmbedder : public Embedder {
  public:
    explicit HashingEmbedder(int dim = 256) : dim_(dim) {}

    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    int dimension() const override { return dim_; }
    std::string id() const override { return "hash-ngram-" + std::to_string(dim_); }

  private:
    int dim_;
};

double cosine(const std::vector<float>& a, const std::vector<float>& b);

std::shared_ptr<Embedder> make_test_embedder();

}  // namespace gca
