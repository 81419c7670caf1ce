#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ocsi/catalog.hpp"
#include "ocsi/embedstore.hpp"

namespace ocsi::textsim {

// Canonical form: lowercase letters, digits and single spaces only.
struct NormalizedText {
  std::string canonical;
  std::vector<std::string> tokens;
  std::u32string codepoints;  // canonical, decoded
};

// NFKC casefolding, then every codepoint that is neither alphanumeric nor a
// combining mark becomes a space; space runs collapse and ends are trimmed.
NormalizedText normalize(std::string_view text);

// Bit-parallel longest-common-subsequence against a fixed pattern.
class LcsPattern {
 public:
  explicit LcsPattern(std::u32string_view pattern);

  std::size_t length() const noexcept { return length_; }
  std::size_t lcs(std::u32string_view text) const;

 private:
  const std::uint64_t* mask_for(char32_t c) const;

  std::size_t length_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> ascii_;  // 128 * words_
  std::unordered_map<char32_t, std::vector<std::uint64_t>> other_;
};

std::size_t lcs_length(std::u32string_view a, std::u32string_view b);

// Minimum insertions plus deletions turning a into b: |a| + |b| - 2 LCS.
std::size_t indel_distance(std::u32string_view a, std::u32string_view b);

// 1 - D / (|a| + |b|); two empty strings score 1.
double indel_similarity(const NormalizedText& a, const NormalizedText& b);

// Distinct tokens of the side with fewer distinct tokens that occur in the
// other side, divided by the other side's distinct token count.
double token_set_containment(const NormalizedText& a, const NormalizedText& b);

// max(indel_similarity, token_set_containment) over normalized inputs.
double token_ratio(std::string_view a, std::string_view b);
double token_ratio(const NormalizedText& a, const NormalizedText& b);

// Song title of the query against the candidate's video title.
double score_simple(const Item& query, const Item& candidate);

// Query rows = items with a song title, candidate columns = every item.
SimilarityMatrix fuzzy_similarity(const Catalog& catalog, unsigned threads = 1);

}  // namespace ocsi::textsim
