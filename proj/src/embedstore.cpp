#include "ocsi/embedstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

#include "binary_io.hpp"

namespace ocsi {

namespace {

constexpr std::string_view kEmbMagic = "EMB1";
constexpr std::string_view kSimMagic = "SIM1";

std::unordered_map<ItemId, std::size_t> build_index(const std::vector<ItemId>& ids, const char* what) {
  std::unordered_map<ItemId, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) throw InvalidInput(std::string(what) + ": empty id");
    if (!index.emplace(ids[i], i).second)
      throw FormatError(FormatErrc::duplicate_id, std::string(what) + ": " + ids[i].str());
  }
  return index;
}

bool same_bits(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

void check_u32(std::size_t n, const char* what) {
  if (n > UINT32_MAX) throw InvalidInput(std::string(what) + " exceeds u32 range");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  return out;
}

// Runs fn(row) for every row, splitting contiguous row ranges over threads.
template <class Fn>
void parallel_rows(std::size_t rows, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(rows, 1))));
  if (threads == 1) {
    for (std::size_t r = 0; r < rows; ++r) fn(r);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (rows + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(rows, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t r = lo; r < hi; ++r) fn(r);
    });
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<ItemId> ids, std::size_t dim, std::vector<float> data)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) throw InvalidInput("embedding dim must be >= 1");
  if (data_.size() != ids_.size() * dim_)
    throw FormatError(FormatErrc::length_mismatch, "embedding data size " + std::to_string(data_.size()) +
                                                       " != " + std::to_string(ids_.size()) + " x " +
                                                       std::to_string(dim_));
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw FormatError(FormatErrc::non_finite, "embedding row " + std::to_string(i / dim_));
  index_ = build_index(ids_, "embedding ids");
}

std::optional<std::size_t> EmbeddingMatrix::position(const ItemId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  return a.dim_ == b.dim_ && a.ids_ == b.ids_ && same_bits(a.data_, b.data_);
}

void write_embeddings(const EmbeddingMatrix& m, std::ostream& out) {
  check_u32(m.size(), "item count");
  check_u32(m.dim(), "dimension");
  detail::LeWriter w(out);
  w.bytes(kEmbMagic);
  w.u32(static_cast<std::uint32_t>(m.size()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  for (const auto& id : m.ids()) w.id(id);
  for (float v : m.data()) w.f32(v);
  w.check();
}

EmbeddingMatrix read_embeddings(std::istream& in) {
  detail::LeReader r(in, "EMB1");
  std::string magic;
  try {
    magic = r.bytes(4);
  } catch (const FormatError&) {
    throw FormatError(FormatErrc::bad_magic, "EMB1: file shorter than magic");
  }
  if (magic != kEmbMagic) throw FormatError(FormatErrc::bad_magic, "EMB1: found '" + magic + "'");
  const std::uint32_t n = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim == 0) throw FormatError(FormatErrc::malformed, "EMB1: dimension 0");
  auto ids = detail::read_id_table(r, n, "EMB1 ids");
  auto data = detail::decode_floats(r.rest(), static_cast<std::size_t>(n) * dim, "EMB1 payload");
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_embeddings(m, out);
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_embeddings(in);
}

SimilarityMatrix::SimilarityMatrix(std::vector<ItemId> query_ids, std::vector<ItemId> candidate_ids,
                                   std::vector<float> scores, SimilarityKind kind, std::vector<std::uint8_t> tiers)
    : query_ids_(std::move(query_ids)),
      candidate_ids_(std::move(candidate_ids)),
      scores_(std::move(scores)),
      kind_(kind),
      tiers_(std::move(tiers)) {
  const std::size_t cells = query_ids_.size() * candidate_ids_.size();
  if (scores_.size() != cells)
    throw FormatError(FormatErrc::length_mismatch,
                      "similarity scores " + std::to_string(scores_.size()) + " != " + std::to_string(cells));
  if (static_cast<std::uint8_t>(kind_) > 3) throw FormatError(FormatErrc::bad_kind, "similarity kind");
  if (kind_ == SimilarityKind::tiered) {
    if (tiers_.size() != cells) throw FormatError(FormatErrc::length_mismatch, "tier bytes do not match cell count");
    for (auto t : tiers_)
      if (t > 1) throw FormatError(FormatErrc::malformed, "tier byte must be 0 or 1");
  } else if (!tiers_.empty()) {
    throw InvalidInput("tier bytes are only valid for tiered matrices");
  }
  for (std::size_t i = 0; i < scores_.size(); ++i)
    if (!std::isfinite(scores_[i])) throw FormatError(FormatErrc::non_finite, "similarity cell " + std::to_string(i));
  query_index_ = build_index(query_ids_, "query ids");
  candidate_index_ = build_index(candidate_ids_, "candidate ids");
}

std::optional<std::size_t> SimilarityMatrix::query_position(const ItemId& id) const {
  auto it = query_index_.find(id);
  if (it == query_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SimilarityMatrix::candidate_position(const ItemId& id) const {
  auto it = candidate_index_.find(id);
  if (it == candidate_index_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const SimilarityMatrix& a, const SimilarityMatrix& b) {
  return a.kind_ == b.kind_ && a.query_ids_ == b.query_ids_ && a.candidate_ids_ == b.candidate_ids_ &&
         same_bits(a.scores_, b.scores_) && a.tiers_ == b.tiers_;
}

void write_similarity(const SimilarityMatrix& m, std::ostream& out) {
  check_u32(m.rows(), "query count");
  check_u32(m.cols(), "candidate count");
  detail::LeWriter w(out);
  w.bytes(kSimMagic);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  w.u8(static_cast<std::uint8_t>(m.kind()));
  for (const auto& id : m.query_ids()) w.id(id);
  for (const auto& id : m.candidate_ids()) w.id(id);
  for (float v : m.scores()) w.f32(v);
  if (m.kind() == SimilarityKind::tiered)
    for (auto t : m.tiers()) w.u8(t);
  w.check();
}

SimilarityMatrix read_similarity(std::istream& in) {
  detail::LeReader r(in, "SIM1");
  std::string magic;
  try {
    magic = r.bytes(4);
  } catch (const FormatError&) {
    throw FormatError(FormatErrc::bad_magic, "SIM1: file shorter than magic");
  }
  if (magic != kSimMagic) throw FormatError(FormatErrc::bad_magic, "SIM1: found '" + magic + "'");
  const std::uint32_t nq = r.u32();
  const std::uint32_t nc = r.u32();
  const std::uint8_t kind = r.u8();
  if (kind > 3) throw FormatError(FormatErrc::bad_kind, "SIM1: kind " + std::to_string(kind));
  auto qids = detail::read_id_table(r, nq, "SIM1 query ids");
  auto cids = detail::read_id_table(r, nc, "SIM1 candidate ids");
  const std::size_t cells = static_cast<std::size_t>(nq) * nc;
  std::string payload = r.rest();
  std::vector<std::uint8_t> tiers;
  if (static_cast<SimilarityKind>(kind) == SimilarityKind::tiered) {
    if (payload.size() != cells * 5)
      throw FormatError(FormatErrc::length_mismatch, "SIM1: expected " + std::to_string(cells * 5) +
                                                         " payload bytes, found " + std::to_string(payload.size()));
    tiers.assign(payload.begin() + static_cast<std::ptrdiff_t>(cells * 4), payload.end());
    payload.resize(cells * 4);
  }
  auto scores = detail::decode_floats(payload, cells, "SIM1 payload");
  return SimilarityMatrix(std::move(qids), std::move(cids), std::move(scores), static_cast<SimilarityKind>(kind),
                          std::move(tiers));
}

void save_similarity(const SimilarityMatrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_similarity(m, out);
}

SimilarityMatrix load_similarity(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_similarity(in);
}

namespace {

double dot(std::span<const float> u, std::span<const float> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  return acc;
}

double cosine_with_norms(std::span<const float> u, std::span<const float> v, double nu, double nv) {
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot(u, v) / (nu * nv);
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw InvalidInput("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  return cosine_with_norms(u, v, std::sqrt(dot(u, u)), std::sqrt(dot(v, v)));
}

SimilarityMatrix full_similarity(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                                 unsigned threads) {
  if (queries.dim() != candidates.dim())
    throw InvalidInput("full_similarity: dimension mismatch " + std::to_string(queries.dim()) + " vs " +
                       std::to_string(candidates.dim()));
  const std::size_t nq = queries.size();
  const std::size_t nc = candidates.size();
  std::vector<double> cand_norms(nc);
  for (std::size_t j = 0; j < nc; ++j) cand_norms[j] = std::sqrt(dot(candidates.row(j), candidates.row(j)));

  std::vector<float> scores(nq * nc);
  parallel_rows(nq, threads, [&](std::size_t i) {
    const auto q = queries.row(i);
    const double nqv = std::sqrt(dot(q, q));
    float* out = scores.data() + i * nc;
    for (std::size_t j = 0; j < nc; ++j)
      out[j] = static_cast<float>(cosine_with_norms(q, candidates.row(j), nqv, cand_norms[j]));
  });
  return SimilarityMatrix(queries.ids(), candidates.ids(), std::move(scores), SimilarityKind::cosine);
}

namespace {

// Columns of row r except the query itself; the first `limit` are ordered.
std::vector<std::size_t> ordered_columns(const SimilarityMatrix& sim, std::size_t r, std::size_t limit) {
  const ItemId& self = sim.query_ids()[r];
  const auto& cids = sim.candidate_ids();
  std::vector<std::size_t> order;
  order.reserve(sim.cols());
  for (std::size_t c = 0; c < sim.cols(); ++c)
    if (cids[c] != self) order.push_back(c);
  const auto row = sim.row(r);
  auto before = [&](std::size_t a, std::size_t b) {
    const auto ta = sim.tier(r, a), tb = sim.tier(r, b);
    if (ta != tb) return ta > tb;
    if (row[a] != row[b]) return row[a] > row[b];
    return cids[a] < cids[b];
  };
  if (limit < order.size()) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit), order.end(), before);
    order.resize(limit);
  } else {
    std::sort(order.begin(), order.end(), before);
  }
  return order;
}

}  // namespace

std::vector<std::size_t> rank_row(const SimilarityMatrix& sim, std::size_t r) {
  return ordered_columns(sim, r, sim.cols());
}

TopKList topk(const SimilarityMatrix& sim, std::size_t k) {
  TopKList out(sim.rows());
  if (k == 0) return out;
  for (std::size_t r = 0; r < sim.rows(); ++r) {
    auto& list = out[r];
    for (auto c : ordered_columns(sim, r, k)) list.push_back({c, sim.at(r, c)});
  }
  return out;
}

}  // namespace ocsi
