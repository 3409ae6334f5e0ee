#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opsub {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A dense representation was requested above the configured entry cap.
class SizeCapError : public Error {
 public:
  SizeCapError(std::size_t requested, std::size_t cap)
      : Error("dense size cap exceeded: " + std::to_string(requested) +
              " entries requested, cap is " + std::to_string(cap)),
        requested_(requested),
        cap_(cap) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t requested_;
  std::size_t cap_;
};

/// The requested basis size exceeds what the data can support.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& mode, std::size_t requested,
                      std::size_t attainable)
      : Error("rank deficiency in " + mode + " mode: requested " +
              std::to_string(requested) + ", attainable " +
              std::to_string(attainable)),
        requested_(requested),
        attainable_(attainable) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t attainable() const noexcept { return attainable_; }

 private:
  std::size_t requested_;
  std::size_t attainable_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace opsub
