#include "ocsi/evalmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace ocsi {

using nlohmann::json;

namespace {

constexpr const char* kReportFormat = "EVAL/1";

}  // namespace

double average_precision(std::span<const std::uint8_t> relevance) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t p = 0; p < relevance.size(); ++p) {
    if (!relevance[p]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(p + 1);
  }
  if (hits == 0) throw InvalidInput("average_precision: no relevant candidate");
  return sum / static_cast<double>(hits);
}

double average_precision(const RankedList& ranked) { return average_precision(ranked.relevant); }

std::size_t first_relevant_rank(std::span<const std::uint8_t> relevance) {
  for (std::size_t p = 0; p < relevance.size(); ++p)
    if (relevance[p]) return p + 1;
  throw InvalidInput("first_relevant_rank: no relevant candidate");
}

std::size_t first_relevant_rank(const RankedList& ranked) { return first_relevant_rank(ranked.relevant); }

RankedList ranked_list(const SimilarityMatrix& sim, std::size_t row, const Catalog& catalog) {
  RankedList out;
  out.query_id = sim.query_ids()[row];
  const Item* query = catalog.find(out.query_id);
  if (!query) throw InvalidInput("query id '" + out.query_id.str() + "' not in catalog");
  for (std::size_t c : rank_row(sim, row)) {
    const ItemId& cid = sim.candidate_ids()[c];
    const Item* cand = catalog.find(cid);
    if (!cand) throw InvalidInput("candidate id '" + cid.str() + "' not in catalog");
    out.candidates.push_back(cid);
    out.relevant.push_back(same_work(*query, *cand) ? 1 : 0);
  }
  return out;
}

EvalReport evaluate(const SimilarityMatrix& sim, const Catalog& catalog) {
  for (const auto& id : sim.candidate_ids())
    if (!catalog.find(id)) throw InvalidInput("candidate id '" + id.str() + "' not in catalog");
  for (const auto& id : sim.query_ids())
    if (!catalog.find(id)) throw InvalidInput("query id '" + id.str() + "' not in catalog");

  EvalReport report;
  double ap_sum = 0.0;
  double rank_sum = 0.0;
  for (std::size_t r = 0; r < sim.rows(); ++r) {
    if (!catalog.find(sim.query_ids()[r])->is_query()) continue;
    const RankedList ranked = ranked_list(sim, r, catalog);
    const auto n_relevant = static_cast<std::size_t>(std::count(ranked.relevant.begin(), ranked.relevant.end(), 1));
    if (n_relevant == 0) {
      ++report.skipped;
      continue;
    }
    QueryEval q{ranked.query_id, n_relevant, average_precision(ranked), first_relevant_rank(ranked)};
    ap_sum += q.average_precision;
    rank_sum += static_cast<double>(q.first_relevant_rank);
    report.queries.push_back(std::move(q));
  }
  report.evaluated = report.queries.size();
  if (report.evaluated > 0) {
    report.map = ap_sum / static_cast<double>(report.evaluated);
    report.mr1 = rank_sum / static_cast<double>(report.evaluated);
  }
  return report;
}

void write_report(const EvalReport& report, std::ostream& out) {
  json queries = json::array();
  for (const auto& q : report.queries)
    queries.push_back({{"query_id", q.query_id.str()},
                       {"n_relevant", q.n_relevant},
                       {"ap", q.average_precision},
                       {"first_relevant_rank", q.first_relevant_rank}});
  json doc = {{"format", kReportFormat},
              {"map", report.map},
              {"mr1", report.mr1},
              {"evaluated", report.evaluated},
              {"skipped", report.skipped},
              {"queries", std::move(queries)}};
  out << doc.dump(1) << '\n';
}

EvalReport read_report(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatErrc::malformed, std::string("EVAL: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_string())
    throw FormatError(FormatErrc::malformed, "EVAL: missing format tag");
  if (doc["format"] != kReportFormat)
    throw FormatError(FormatErrc::version_mismatch, "EVAL: unsupported format " + doc["format"].get<std::string>());
  try {
    EvalReport report;
    report.map = doc.at("map").get<double>();
    report.mr1 = doc.at("mr1").get<double>();
    report.evaluated = doc.at("evaluated").get<std::size_t>();
    report.skipped = doc.at("skipped").get<std::size_t>();
    for (const auto& q : doc.at("queries"))
      report.queries.push_back({ItemId(q.at("query_id").get<std::string>()), q.at("n_relevant").get<std::size_t>(),
                                q.at("ap").get<double>(), q.at("first_relevant_rank").get<std::size_t>()});
    if (report.queries.size() != report.evaluated)
      throw FormatError(FormatErrc::malformed, "EVAL: query count does not match 'evaluated'");
    return report;
  } catch (const json::exception& e) {
    throw FormatError(FormatErrc::malformed, std::string("EVAL: ") + e.what());
  }
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  write_report(report, out);
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_report(in);
}

std::string format_table(const EvalReport& report) {
  std::size_t width = 8;
  for (const auto& q : report.queries) width = std::max(width, q.query_id.str().size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "query" << "  " << std::right << std::setw(5) << "rel"
     << "  " << std::setw(8) << "AP" << "  " << std::setw(6) << "rank1" << '\n';
  os << std::string(width + 27, '-') << '\n';
  os << std::fixed;
  for (const auto& q : report.queries)
    os << std::left << std::setw(static_cast<int>(width)) << q.query_id.str() << "  " << std::right << std::setw(5)
       << q.n_relevant << "  " << std::setw(8) << std::setprecision(4) << q.average_precision << "  " << std::setw(6)
       << q.first_relevant_rank << '\n';
  os << std::string(width + 27, '-') << '\n';
  os << "MAP " << std::setprecision(4) << report.map << "  MR1 " << std::setprecision(2) << report.mr1 << "  (evaluated "
     << report.evaluated << ", skipped " << report.skipped << ")\n";
  return os.str();
}

}  // namespace ocsi
