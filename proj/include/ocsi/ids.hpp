#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <utility>

#include "ocsi/error.hpp"

namespace ocsi {

// Opaque non-empty string identifier, distinct per Tag.
template <class Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw InvalidInput("identifier must be non-empty");
  }

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const StrongId&, const StrongId&) = default;
  friend bool operator==(const StrongId&, const StrongId&) = default;

  friend std::ostream& operator<<(std::ostream& os, const StrongId& id) {
    return os << id.value_;
  }

 private:
  std::string value_;
};

using ItemId = StrongId<struct ItemIdTag>;
using WorkId = StrongId<struct WorkIdTag>;

}  // namespace ocsi

template <class Tag>
struct std::hash<ocsi::StrongId<Tag>> {
  std::size_t operator()(const ocsi::StrongId<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
