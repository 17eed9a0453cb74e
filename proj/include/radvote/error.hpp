#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace radvote {

enum class ErrorKind {
  Argument,
  DegenerateInput,
  EmptyCloud,
  Resource,
  EmptyAccumulator,
  Divergence,
  DegenerateScene,
  Pipeline,
  Parse,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can report
// it as machine-readable JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  // Line number for parse errors, step index for divergence errors.
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> location_;
};

}  // namespace radvote
