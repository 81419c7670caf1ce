#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ocsi/catalog.hpp"
#include "ocsi/embedstore.hpp"

namespace ocsi::tripletlab {

struct MiningConfig {
  std::size_t works_per_batch = 4;
  std::size_t items_per_work = 4;
  double margin = 0.3;
  std::uint64_t seed = 0;
};

// P * K embedding rows with exactly K rows per label.
class MiningBatch {
 public:
  MiningBatch(std::size_t dim, std::vector<float> embeddings, std::vector<std::size_t> labels,
              std::vector<ItemId> item_ids = {});

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const { return {embeddings_.data() + i * dim_, dim_}; }
  std::size_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  const std::vector<ItemId>& item_ids() const noexcept { return item_ids_; }

 private:
  std::size_t dim_;
  std::vector<float> embeddings_;
  std::vector<std::size_t> labels_;
  std::vector<ItemId> item_ids_;
};

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
  double d_ap;
  double d_an;
};

double cosine_distance(std::span<const float> u, std::span<const float> v);

// P works uniformly without replacement, then K embedded items per work.
MiningBatch sample_batch(const EmbeddingMatrix& embeddings, const Catalog& catalog, const MiningConfig& config);

// Per anchor: farthest same-label row and nearest other-label row; ties go to
// the smallest row index.
std::vector<Triplet> batch_hard_triplets(const MiningBatch& batch);

double triplet_loss(double d_ap, double d_an, double margin);
double triplet_loss(const Triplet& t, double margin);

double mean_batch_loss(const MiningBatch& batch, double margin);

}  // namespace ocsi::tripletlab
