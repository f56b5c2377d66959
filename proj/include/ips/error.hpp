#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ips {

enum class Errc {
  // lattice
  InvalidLattice,
  ZeroOffsetMass,
  AsymmetricKernel,
  NotNormalized,
  Anisotropic,
  Reducible,
  SupportTooLargeForTorus,
  ZeroOffset,
  InvalidNeighborhood,
  // models / cancellative
  InvalidModel,
  NotAPerturbation,
  OnesNotTrap,
  NotCancellative,
  WindowTooLarge,
  EquivalenceViolated,
  // dual / forward
  EmptyState,
  BudgetExceeded,
  StateSpaceTooLarge,
  // orchestration
  ConfigError,
  ParseError,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ips
