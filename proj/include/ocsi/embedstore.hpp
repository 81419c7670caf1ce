#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ocsi/ids.hpp"

namespace ocsi {

// Row-major |ids| x dim matrix of finite 32-bit floats.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<ItemId> ids, std::size_t dim, std::vector<float> data);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<ItemId>& ids() const noexcept { return ids_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::optional<std::size_t> position(const ItemId& id) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

 private:
  std::vector<ItemId> ids_;
  std::size_t dim_ = 1;
  std::vector<float> data_;
  std::unordered_map<ItemId, std::size_t> index_;
};

void write_embeddings(const EmbeddingMatrix& m, std::ostream& out);
EmbeddingMatrix read_embeddings(std::istream& in);
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

enum class SimilarityKind : std::uint8_t { fuzzy = 0, cosine = 1, tiered = 2, fused = 3 };

enum class Tier : std::uint8_t { blocker = 0, heavy = 1 };

// Query x candidate score table. Tiered matrices carry one tier byte per cell.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::vector<ItemId> query_ids, std::vector<ItemId> candidate_ids,
                   std::vector<float> scores, SimilarityKind kind,
                   std::vector<std::uint8_t> tiers = {});

  std::size_t rows() const noexcept { return query_ids_.size(); }
  std::size_t cols() const noexcept { return candidate_ids_.size(); }
  SimilarityKind kind() const noexcept { return kind_; }
  const std::vector<ItemId>& query_ids() const noexcept { return query_ids_; }
  const std::vector<ItemId>& candidate_ids() const noexcept { return candidate_ids_; }
  std::span<const float> scores() const noexcept { return scores_; }
  std::span<const std::uint8_t> tiers() const noexcept { return tiers_; }

  float at(std::size_t r, std::size_t c) const { return scores_[r * cols() + c]; }
  std::span<const float> row(std::size_t r) const { return {scores_.data() + r * cols(), cols()}; }
  Tier tier(std::size_t r, std::size_t c) const {
    return tiers_.empty() ? Tier::blocker : static_cast<Tier>(tiers_[r * cols() + c]);
  }

  std::optional<std::size_t> query_position(const ItemId& id) const;
  std::optional<std::size_t> candidate_position(const ItemId& id) const;

  friend bool operator==(const SimilarityMatrix& a, const SimilarityMatrix& b);

 private:
  std::vector<ItemId> query_ids_;
  std::vector<ItemId> candidate_ids_;
  std::vector<float> scores_;
  SimilarityKind kind_ = SimilarityKind::cosine;
  std::vector<std::uint8_t> tiers_;
  std::unordered_map<ItemId, std::size_t> query_index_;
  std::unordered_map<ItemId, std::size_t> candidate_index_;
};

void write_similarity(const SimilarityMatrix& m, std::ostream& out);
SimilarityMatrix read_similarity(std::istream& in);
void save_similarity(const SimilarityMatrix& m, const std::filesystem::path& path);
SimilarityMatrix load_similarity(const std::filesystem::path& path);

// dot(u, v) / (|u| |v|) accumulated in double in index order; 0 when either
// norm is zero. Throws InvalidInput on dimension mismatch.
double cosine(std::span<const float> u, std::span<const float> v);

// scores[i][j] = cosine(queries.row(i), candidates.row(j)), parallel across rows.
SimilarityMatrix full_similarity(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                                 unsigned threads = 1);

struct ScoredCandidate {
  std::size_t column;
  float score;

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

// Per query row, best candidates first.
using TopKList = std::vector<std::vector<ScoredCandidate>>;

// Columns of row r ordered by tier (heavy first), score descending, then
// ascending candidate id; the query's own id is excluded.
std::vector<std::size_t> rank_row(const SimilarityMatrix& sim, std::size_t r);

// First k entries of rank_row for every row (tiers ignored unless present).
TopKList topk(const SimilarityMatrix& sim, std::size_t k);

}  // namespace ocsi
