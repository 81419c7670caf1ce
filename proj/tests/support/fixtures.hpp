#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ocsi/catalog.hpp"
#include "ocsi/embedstore.hpp"
#include "ocsi/rng.hpp"

namespace ocsi::testkit {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

Item make_item(const std::string& id, const std::string& work, const std::string& song_title,
               const std::string& video_title);
Item make_distractor(const std::string& id, const std::string& video_title);

// Two score modalities over one catalog of `n_works` x `items_per_work`
// items. Modality a ranks relevant candidates of the first half of the works
// perfectly and is uninformative on the second half; modality b the reverse.
struct ComplementaryFixture {
  Catalog catalog;
  SimilarityMatrix a;
  SimilarityMatrix b;
};

ComplementaryFixture make_complementary_fixture(std::uint64_t seed, std::size_t n_works = 20,
                                                std::size_t items_per_work = 4);

// Files for a textsim + embed-sim chain: catalog.jsonl, queries.emb,
// candidates.emb. Titles carry the signal for the first half of the works,
// embeddings for the second half.
void write_chain_fixture(const std::filesystem::path& dir, std::uint64_t seed);

std::vector<float> random_floats(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0);

std::vector<ItemId> numbered_ids(const std::string& prefix, std::size_t n);

std::string read_file(const std::filesystem::path& path);

}  // namespace ocsi::testkit
