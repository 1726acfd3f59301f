#pragma once

#include <stdexcept>
#include <string>

namespace relx {

// Error categories surfaced to callers. The CLI maps kUsage to exit code 2
// and everything else to exit code 1; the service maps them to HTTP codes.
enum class ErrorKind {
  kUsage,
  kIo,
  kParse,
  kDuplicateId,
  kEmptyText,
  kUnknownId,
  kUnknownLabel,
  kEmptyCorpus,
  kInfeasibleSplit,
  kMalformedTree,
  kUnmatchedDocument,
  kDimension,
  kConfig,
  kDegenerateTraining,
  kConflict,
  kNotFound,
  kState,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Attaches a 1-based line number to a parse error message.
inline Error line_error(ErrorKind kind, const std::string& source, std::size_t line,
                        const std::string& what) {
  return Error(kind, source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace relx
