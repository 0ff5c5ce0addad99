#ifndef SNASH_ERRORS_HPP
#define SNASH_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace snash {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Invalid configuration. Carries every validation message, not just the first.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> messages)
      : std::runtime_error(join(messages)), messages_(std::move(messages)) {}
  explicit ConfigError(const std::string& message) : ConfigError(std::vector<std::string>{message}) {}

  const std::vector<std::string>& messages() const noexcept { return messages_; }

private:
  static std::string join(const std::vector<std::string>& m) {
    std::string out;
    for (const auto& s : m) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> messages_;
};

// Numerical failure: singular solve, stalled iteration, divergence.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what, std::vector<double> history = {})
      : std::runtime_error(what), history_(std::move(history)) {}

  // Residual or update history leading to the failure (may be empty).
  const std::vector<double>& history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

}  // namespace snash

#endif  // SNASH_ERRORS_HPP
