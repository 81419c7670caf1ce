#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

namespace ocsi::testkit {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  path_ = fs::temp_directory_path() /
          ("ocsi-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Item make_item(const std::string& id, const std::string& work, const std::string& song_title,
               const std::string& video_title) {
  Item item;
  item.id = ItemId(id);
  item.work_id = WorkId(work);
  item.song_title = song_title;
  item.video_title = video_title;
  return item;
}

Item make_distractor(const std::string& id, const std::string& video_title) {
  Item item;
  item.id = ItemId(id);
  item.video_title = video_title;
  return item;
}

std::vector<float> random_floats(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(rng.uniform(lo, hi));
  return out;
}

std::vector<ItemId> numbered_ids(const std::string& prefix, std::size_t n) {
  std::vector<ItemId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream os;
    os << prefix << std::setw(4) << std::setfill('0') << i;
    ids.emplace_back(os.str());
  }
  return ids;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::string work_name(std::size_t w) {
  std::ostringstream os;
  os << "W" << std::setw(2) << std::setfill('0') << (w + 1);
  return os.str();
}

std::string item_name(std::size_t w, std::size_t k) {
  std::ostringstream os;
  os << "i" << std::setw(2) << std::setfill('0') << (w + 1) << "-" << k;
  return os.str();
}

}  // namespace

ComplementaryFixture make_complementary_fixture(std::uint64_t seed, std::size_t n_works, std::size_t items_per_work) {
  std::vector<Item> items;
  for (std::size_t w = 0; w < n_works; ++w)
    for (std::size_t k = 0; k < items_per_work; ++k)
      items.push_back(make_item(item_name(w, k), work_name(w), "song " + work_name(w), "video " + item_name(w, k)));
  Catalog catalog(items);

  std::vector<ItemId> ids;
  for (const auto& it : items) ids.push_back(it.id);
  const std::size_t n = ids.size();
  Rng rng(seed);
  std::vector<float> a(n * n), b(n * n);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t qw = q / items_per_work;
    const bool a_informative = qw < n_works / 2;
    for (std::size_t c = 0; c < n; ++c) {
      const bool relevant = (c / items_per_work) == qw;
      const double informative = relevant ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.5);
      const double noise = rng.uniform(0.0, 0.5);
      a[q * n + c] = static_cast<float>(a_informative ? informative : noise);
      b[q * n + c] = static_cast<float>(a_informative ? noise : informative);
    }
  }
  return {std::move(catalog), SimilarityMatrix(ids, ids, std::move(a), SimilarityKind::fuzzy),
          SimilarityMatrix(ids, ids, std::move(b), SimilarityKind::cosine)};
}

void write_chain_fixture(const fs::path& dir, std::uint64_t seed) {
  static const char* kWords[] = {"harbor", "lantern", "meadow", "copper", "thistle", "glacier", "saffron",
                                 "orchid", "falcon", "juniper", "quartz", "ember",   "willow", "cobalt",
                                 "marigold", "tundra", "velvet", "zephyr", "basalt", "indigo"};
  constexpr std::size_t kWorks = 20, kItems = 4, kDim = 16, kDistractors = 6;
  Rng rng(seed);

  std::vector<Item> items;
  for (std::size_t w = 0; w < kWorks; ++w) {
    for (std::size_t k = 0; k < kItems; ++k) {
      std::string video;
      if (w < kWorks / 2) {
        video = std::string(kWords[w]) + " cover take " + std::to_string(k + 1);
      } else {
        video = "upload " + std::to_string(1000 + rng.below(9000)) + " full hd";
      }
      items.push_back(make_item(item_name(w, k), work_name(w), kWords[w], video));
    }
  }
  for (std::size_t d = 0; d < kDistractors; ++d)
    items.push_back(make_distractor("z" + std::to_string(d), "clip " + std::to_string(1000 + rng.below(9000))));
  save_catalog(Catalog(items), dir / "catalog.jsonl");

  auto unit = [&](std::vector<float> v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x = static_cast<float>(x / norm);
    return v;
  };
  std::vector<std::vector<float>> centroids;
  for (std::size_t w = 0; w < kWorks; ++w) centroids.push_back(unit(random_floats(rng, kDim)));

  std::vector<ItemId> query_ids, all_ids;
  std::vector<float> query_data, all_data;
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::vector<float> v;
    const std::size_t w = i / kItems;
    if (items[i].work_id && w >= kWorks / 2) {
      v = centroids[w];
      auto jitter = random_floats(rng, kDim, -0.15, 0.15);
      for (std::size_t d = 0; d < kDim; ++d) v[d] += jitter[d];
    } else {
      v = random_floats(rng, kDim);
    }
    v = unit(std::move(v));
    all_ids.push_back(items[i].id);
    all_data.insert(all_data.end(), v.begin(), v.end());
    if (items[i].song_title) {
      query_ids.push_back(items[i].id);
      query_data.insert(query_data.end(), v.begin(), v.end());
    }
  }
  save_embeddings(EmbeddingMatrix(query_ids, kDim, query_data), dir / "queries.emb");
  save_embeddings(EmbeddingMatrix(all_ids, kDim, all_data), dir / "candidates.emb");
}

}  // namespace ocsi::testkit
