#include "ocsi/textsim.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <bit>
#include <thread>
#include <unordered_set>

namespace ocsi::textsim {

namespace {

const icu::Normalizer2& nfkc_casefold() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status)) throw Error(std::string("ICU NFKC_Casefold unavailable: ") + u_errorName(status));
    return n;
  }();
  return *instance;
}

bool is_word_codepoint(UChar32 c) {
  return u_isalnum(c) || (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

}  // namespace

NormalizedText normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::UnicodeString source =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString folded = nfkc_casefold().normalize(source, status);
  if (U_FAILURE(status)) throw Error(std::string("normalization failed: ") + u_errorName(status));

  NormalizedText out;
  bool pending_space = false;
  for (int32_t i = 0; i < folded.length(); i = folded.moveIndex32(i, 1)) {
    const UChar32 c = folded.char32At(i);
    if (!is_word_codepoint(c)) {
      pending_space = !out.codepoints.empty();
      continue;
    }
    if (pending_space) {
      out.codepoints.push_back(U' ');
      pending_space = false;
    }
    out.codepoints.push_back(static_cast<char32_t>(c));
  }

  out.canonical.reserve(out.codepoints.size());
  std::string token;
  for (char32_t c : out.codepoints) {
    append_utf8(out.canonical, c);
    if (c == U' ') {
      out.tokens.push_back(std::move(token));
      token.clear();
    } else {
      append_utf8(token, c);
    }
  }
  if (!token.empty()) out.tokens.push_back(std::move(token));
  return out;
}

LcsPattern::LcsPattern(std::u32string_view pattern)
    : length_(pattern.size()), words_((pattern.size() + 63) / 64), ascii_(128 * words_, 0) {
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char32_t c = pattern[i];
    std::uint64_t* mask;
    if (c < 128) {
      mask = &ascii_[c * words_];
    } else {
      auto& v = other_[c];
      v.resize(words_, 0);
      mask = v.data();
    }
    mask[i / 64] |= std::uint64_t{1} << (i % 64);
  }
}

const std::uint64_t* LcsPattern::mask_for(char32_t c) const {
  if (c < 128) return &ascii_[c * words_];
  auto it = other_.find(c);
  return it == other_.end() ? nullptr : it->second.data();
}

// Bit vector S holds a 1 for every pattern position not yet matched in the
// LCS frontier; per text character S = (S + (S & M)) | (S & ~M). The LCS is
// the number of zero bits within the pattern length.
std::size_t LcsPattern::lcs(std::u32string_view text) const {
  if (length_ == 0 || text.empty()) return 0;
  std::vector<std::uint64_t> s(words_, ~std::uint64_t{0});
  for (char32_t c : text) {
    const std::uint64_t* m = mask_for(c);
    if (m == nullptr) continue;
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      const std::uint64_t u = s[w] & m[w];
      const std::uint64_t sum1 = s[w] + u;
      const std::uint64_t c1 = sum1 < s[w];
      const std::uint64_t sum = sum1 + carry;
      const std::uint64_t c2 = sum < sum1;
      carry = c1 | c2;
      s[w] = sum | (s[w] & ~m[w]);
    }
  }
  std::size_t matched = 0;
  for (std::size_t w = 0; w < words_; ++w) {
    std::uint64_t zeros = ~s[w];
    const std::size_t bits_here = std::min<std::size_t>(64, length_ - w * 64);
    if (bits_here < 64) zeros &= (std::uint64_t{1} << bits_here) - 1;
    matched += static_cast<std::size_t>(std::popcount(zeros));
  }
  return matched;
}

std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  // The pattern side costs one bit per codepoint; keep it the shorter one.
  if (a.size() > b.size()) std::swap(a, b);
  return LcsPattern(a).lcs(b);
}

std::size_t indel_distance(std::u32string_view a, std::u32string_view b) {
  return a.size() + b.size() - 2 * lcs_length(a, b);
}

namespace {

double indel_from_lcs(std::size_t la, std::size_t lb, std::size_t lcs) {
  const std::size_t total = la + lb;
  if (total == 0) return 1.0;
  return 1.0 - static_cast<double>(total - 2 * lcs) / static_cast<double>(total);
}

}  // namespace

double indel_similarity(const NormalizedText& a, const NormalizedText& b) {
  return indel_from_lcs(a.codepoints.size(), b.codepoints.size(), lcs_length(a.codepoints, b.codepoints));
}

double token_set_containment(const NormalizedText& a, const NormalizedText& b) {
  const std::unordered_set<std::string_view> sa(a.tokens.begin(), a.tokens.end());
  const std::unordered_set<std::string_view> sb(b.tokens.begin(), b.tokens.end());
  const bool a_shorter = sa.size() <= sb.size();
  const auto& shorter = a_shorter ? sa : sb;
  const auto& longer = a_shorter ? sb : sa;
  if (longer.empty()) return shorter.empty() ? 1.0 : 0.0;
  std::size_t hits = 0;
  for (auto t : shorter) hits += longer.count(t);
  return static_cast<double>(hits) / static_cast<double>(longer.size());
}

double token_ratio(const NormalizedText& a, const NormalizedText& b) {
  return std::max(indel_similarity(a, b), token_set_containment(a, b));
}

double token_ratio(std::string_view a, std::string_view b) { return token_ratio(normalize(a), normalize(b)); }

double score_simple(const Item& query, const Item& candidate) {
  if (!query.song_title) throw InvalidInput("score_simple: query " + query.id.str() + " has no song_title");
  return token_ratio(*query.song_title, candidate.video_title);
}

SimilarityMatrix fuzzy_similarity(const Catalog& catalog, unsigned threads) {
  std::vector<ItemId> query_ids, candidate_ids;
  std::vector<NormalizedText> query_texts, candidate_texts;
  for (const Item& item : catalog.items()) {
    candidate_ids.push_back(item.id);
    candidate_texts.push_back(normalize(item.video_title));
    if (item.song_title) {
      query_ids.push_back(item.id);
      query_texts.push_back(normalize(*item.song_title));
    }
  }
  const std::size_t nq = query_ids.size();
  const std::size_t nc = candidate_ids.size();
  std::vector<float> scores(nq * nc);
  auto fill_row = [&](std::size_t i) {
    const NormalizedText& q = query_texts[i];
    const LcsPattern pattern(q.codepoints);
    for (std::size_t j = 0; j < nc; ++j) {
      const NormalizedText& c = candidate_texts[j];
      const double indel = indel_from_lcs(q.codepoints.size(), c.codepoints.size(), pattern.lcs(c.codepoints));
      scores[i * nc + j] = static_cast<float>(std::max(indel, token_set_containment(q, c)));
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1 || nq < 2) {
    for (std::size_t i = 0; i < nq; ++i) fill_row(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < nq; i += threads) fill_row(i);
      });
  }
  return SimilarityMatrix(std::move(query_ids), std::move(candidate_ids), std::move(scores), SimilarityKind::fuzzy);
}

}  // namespace ocsi::textsim
