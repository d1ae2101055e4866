#pragma once

#include <string>

namespace hyperod {

/// Which design block enters the normal matrix: F^n (initial conditions
/// only), [F^n | ∂f^n/∂k] (initial conditions plus parameter), or the
/// Jacobian G^n of the extended map (x, k) -> (f_k(x), k).
enum class NormalMode { CaseA, CaseB, AuxiliaryG };

[[nodiscard]] std::string to_string(NormalMode mode);
[[nodiscard]] NormalMode normal_mode_from_string(const std::string& text);

}  // namespace hyperod
