#include "binary_io.hpp"

#include <cmath>
#include <iterator>
#include <limits>
#include <unordered_set>

namespace ocsi {

const char* to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::truncated: return "truncated file";
    case FormatErrc::duplicate_id: return "duplicate id";
    case FormatErrc::length_mismatch: return "length mismatch";
    case FormatErrc::non_finite: return "non-finite value";
    case FormatErrc::bad_kind: return "bad kind tag";
    case FormatErrc::version_mismatch: return "version mismatch";
    case FormatErrc::malformed: return "malformed document";
  }
  return "format error";
}

namespace detail {

void LeWriter::id(const ItemId& id) {
  const std::string& s = id.str();
  if (s.size() > std::numeric_limits<std::uint16_t>::max())
    throw InvalidInput("id longer than 65535 bytes: " + s.substr(0, 32) + "...");
  u16(static_cast<std::uint16_t>(s.size()));
  bytes(s);
}

void LeWriter::check() const {
  if (!out_) throw Error("write failed");
}

std::string LeReader::bytes(std::size_t n) {
  std::string s(n, '\0');
  in_.read(s.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw FormatError(FormatErrc::truncated, what_ + ": unexpected end of data");
  return s;
}

std::uint64_t LeReader::get_le(int n) {
  unsigned char buf[8];
  in_.read(reinterpret_cast<char*>(buf), n);
  if (in_.gcount() != n) throw FormatError(FormatErrc::truncated, what_ + ": unexpected end of data");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

ItemId LeReader::id() {
  const std::uint16_t len = u16();
  if (len == 0) throw FormatError(FormatErrc::malformed, what_ + ": empty id");
  return ItemId(bytes(len));
}

std::string LeReader::rest() {
  return std::string(std::istreambuf_iterator<char>(in_), std::istreambuf_iterator<char>());
}

std::vector<ItemId> read_id_table(LeReader& r, std::uint32_t n, std::string_view what) {
  std::vector<ItemId> ids;
  ids.reserve(n);
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    ItemId id = r.id();
    if (!seen.insert(id.str()).second)
      throw FormatError(FormatErrc::duplicate_id, std::string(what) + ": " + id.str());
    ids.push_back(std::move(id));
  }
  return ids;
}

std::vector<float> decode_floats(const std::string& payload, std::size_t expected, std::string_view what) {
  if (payload.size() != expected * 4)
    throw FormatError(FormatErrc::length_mismatch, std::string(what) + ": expected " + std::to_string(expected * 4) +
                                                       " payload bytes, found " + std::to_string(payload.size()));
  std::vector<float> out(expected);
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(out[i])) throw FormatError(FormatErrc::non_finite, std::string(what) + ": value " + std::to_string(i));
  }
  return out;
}

}  // namespace detail
}  // namespace ocsi
