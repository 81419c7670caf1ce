#include "ocsi/tripletlab.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ocsi/rng.hpp"

namespace ocsi::tripletlab {

MiningBatch::MiningBatch(std::size_t dim, std::vector<float> embeddings, std::vector<std::size_t> labels,
                         std::vector<ItemId> item_ids)
    : dim_(dim), embeddings_(std::move(embeddings)), labels_(std::move(labels)), item_ids_(std::move(item_ids)) {
  if (dim_ == 0) throw InvalidInput("MiningBatch: dim must be >= 1");
  if (embeddings_.size() != labels_.size() * dim_) throw InvalidInput("MiningBatch: embedding/label size mismatch");
  if (!item_ids_.empty() && item_ids_.size() != labels_.size()) throw InvalidInput("MiningBatch: id/label size mismatch");
  std::map<std::size_t, std::size_t> per_label;
  for (auto l : labels_) ++per_label[l];
  if (per_label.size() < 2) throw InvalidInput("MiningBatch: needs at least 2 distinct labels");
  const std::size_t k = per_label.begin()->second;
  if (k < 2) throw InvalidInput("MiningBatch: needs at least 2 rows per label");
  for (const auto& [label, count] : per_label)
    if (count != k) throw InvalidInput("MiningBatch: label " + std::to_string(label) + " has " + std::to_string(count) +
                                       " rows, expected " + std::to_string(k));
}

double cosine_distance(std::span<const float> u, std::span<const float> v) { return 1.0 - cosine(u, v); }

MiningBatch sample_batch(const EmbeddingMatrix& embeddings, const Catalog& catalog, const MiningConfig& config) {
  if (config.works_per_batch < 2 || config.items_per_work < 2)
    throw InvalidInput("sample_batch: works_per_batch and items_per_work must be >= 2");
  if (config.margin < 0.0) throw InvalidInput("sample_batch: margin must be >= 0");

  // Embedded items per work, in catalog order.
  std::map<WorkId, std::vector<std::size_t>> rows_by_work;
  for (const auto& item : catalog.items()) {
    if (!item.work_id) continue;
    if (auto row = embeddings.position(item.id)) rows_by_work[*item.work_id].push_back(*row);
  }
  std::vector<const std::vector<std::size_t>*> eligible;
  for (const auto& [_, rows] : rows_by_work)
    if (rows.size() >= config.items_per_work) eligible.push_back(&rows);
  if (eligible.size() < config.works_per_batch)
    throw InvalidInput("sample_batch: " + std::to_string(eligible.size()) + " eligible works (need " +
                       std::to_string(config.works_per_batch) + " with >= " + std::to_string(config.items_per_work) +
                       " embedded items)");

  Rng rng(config.seed);
  rng.partial_shuffle(eligible, config.works_per_batch);

  const std::size_t dim = embeddings.dim();
  std::vector<float> data;
  std::vector<std::size_t> labels;
  std::vector<ItemId> ids;
  data.reserve(config.works_per_batch * config.items_per_work * dim);
  for (std::size_t w = 0; w < config.works_per_batch; ++w) {
    std::vector<std::size_t> rows = *eligible[w];
    rng.partial_shuffle(rows, config.items_per_work);
    for (std::size_t k = 0; k < config.items_per_work; ++k) {
      const auto row = embeddings.row(rows[k]);
      data.insert(data.end(), row.begin(), row.end());
      labels.push_back(w);
      ids.push_back(embeddings.ids()[rows[k]]);
    }
  }
  return MiningBatch(dim, std::move(data), std::move(labels), std::move(ids));
}

std::vector<Triplet> batch_hard_triplets(const MiningBatch& batch) {
  const std::size_t n = batch.size();
  std::vector<double> dist(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) dist[i * n + j] = dist[j * n + i] = cosine_distance(batch.row(i), batch.row(j));

  std::vector<Triplet> out;
  out.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t pos = n, neg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      const double d = dist[a * n + j];
      if (batch.label(j) == batch.label(a)) {
        if (pos == n || d > dist[a * n + pos]) pos = j;
      } else if (neg == n || d < dist[a * n + neg]) {
        neg = j;
      }
    }
    out.push_back({a, pos, neg, dist[a * n + pos], dist[a * n + neg]});
  }
  return out;
}

double triplet_loss(double d_ap, double d_an, double margin) { return std::max(0.0, d_ap - d_an + margin); }

double triplet_loss(const Triplet& t, double margin) { return triplet_loss(t.d_ap, t.d_an, margin); }

double mean_batch_loss(const MiningBatch& batch, double margin) {
  const auto triplets = batch_hard_triplets(batch);
  double sum = 0.0;
  for (const auto& t : triplets) sum += triplet_loss(t, margin);
  return sum / static_cast<double>(triplets.size());
}

}  // namespace ocsi::tripletlab
