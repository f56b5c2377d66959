#include "ips/error.hpp"

namespace ips {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidLattice: return "InvalidLattice";
    case Errc::ZeroOffsetMass: return "ZeroOffsetMass";
    case Errc::AsymmetricKernel: return "AsymmetricKernel";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::Anisotropic: return "Anisotropic";
    case Errc::Reducible: return "Reducible";
    case Errc::SupportTooLargeForTorus: return "SupportTooLargeForTorus";
    case Errc::ZeroOffset: return "ZeroOffset";
    case Errc::InvalidNeighborhood: return "InvalidNeighborhood";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::NotAPerturbation: return "NotAPerturbation";
    case Errc::OnesNotTrap: return "OnesNotTrap";
    case Errc::NotCancellative: return "NotCancellative";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::EquivalenceViolated: return "EquivalenceViolated";
    case Errc::EmptyState: return "EmptyState";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::ConfigError: return "ConfigError";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ips
