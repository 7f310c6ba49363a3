#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace volgrowth {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGrowthFunction : public Error { using Error::Error; };
class HorizonTooSmall : public Error { using Error::Error; };
class NormalizationFailed : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class SearchExhausted : public Error { using Error::Error; };
class IncompleteCatalog : public Error { using Error::Error; };
class InfeasibleSelection : public Error { using Error::Error; };
class PlacementConflict : public Error { using Error::Error; };
class MalformedTree : public Error { using Error::Error; };
class OnTrunk : public Error { using Error::Error; };
class MultiTrunk : public Error { using Error::Error; };
class InvalidPiece : public Error { using Error::Error; };
class UnsupportedOnQuotient : public Error { using Error::Error; };

class InfeasibleGrowth : public Error {
 public:
  InfeasibleGrowth(std::int64_t level, const std::string& why)
      : Error("infeasible growth at level " + std::to_string(level) + ": " + why), level_(level) {}
  std::int64_t level() const noexcept { return level_; }

 private:
  std::int64_t level_;
};

}  // namespace volgrowth
