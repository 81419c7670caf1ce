#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ocsi/catalog.hpp"
#include "ocsi/embedstore.hpp"

namespace ocsi {

struct RankedList {
  ItemId query_id;
  std::vector<ItemId> candidates;      // best first
  std::vector<std::uint8_t> relevant;  // parallel to candidates
};

// Relevance flags in rank order. Throws InvalidInput without a relevant entry.
double average_precision(std::span<const std::uint8_t> relevance_in_rank_order);
double average_precision(const RankedList& ranked);

// 1-based.
std::size_t first_relevant_rank(std::span<const std::uint8_t> relevance_in_rank_order);
std::size_t first_relevant_rank(const RankedList& ranked);

RankedList ranked_list(const SimilarityMatrix& sim, std::size_t row, const Catalog& catalog);

struct QueryEval {
  ItemId query_id;
  std::size_t n_relevant = 0;
  double average_precision = 0.0;
  std::size_t first_relevant_rank = 0;
};

struct EvalReport {
  std::vector<QueryEval> queries;
  double map = 0.0;
  double mr1 = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

// Queries: matrix rows whose item carries a work id and a song title.
// Rows without a relevant candidate are counted in `skipped`.
EvalReport evaluate(const SimilarityMatrix& sim, const Catalog& catalog);

void write_report(const EvalReport& report, std::ostream& out);
EvalReport read_report(std::istream& in);
void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

std::string format_table(const EvalReport& report);

}  // namespace ocsi
