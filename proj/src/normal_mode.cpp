#include "hyperod/normal_mode.hpp"

#include "hyperod/error.hpp"

namespace hyperod {

std::string to_string(NormalMode mode) {
  switch (mode) {
    case NormalMode::CaseA:
      return "a";
    case NormalMode::CaseB:
      return "b";
    case NormalMode::AuxiliaryG:
      return "g";
  }
  return "?";
}

NormalMode normal_mode_from_string(const std::string& text) {
  if (text == "a" || text == "A") return NormalMode::CaseA;
  if (text == "b" || text == "B") return NormalMode::CaseB;
  if (text == "g" || text == "G") return NormalMode::AuxiliaryG;
  throw Error(ErrorCode::InvalidArgument, "unknown case '" + text + "' (expected a, b or g)");
}

}  // namespace hyperod
