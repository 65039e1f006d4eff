#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lfdyn {

/// User-facing input problem (bad config, bad structure, bad schedule).
/// Carries every problem found, not just the first.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  explicit ValidationError(const std::string& problem)
      : ValidationError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
      if (!out.empty()) out += '\n';
      out += item;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

/// Broken precondition inside the engine (a bug, not a user error).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A run that started but could not continue (non-finite state, I/O failure).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lfdyn
