#pragma once

#include <cstddef>
#include <string>

#include "toniq/builtin_data.hpp"
#include "toniq/errors.hpp"
#include "toniq/qubo.hpp"
#include "toniq/serialize.hpp"

namespace toniq {

inline constexpr std::size_t kBuiltinSizes[] = {3, 4, 5, 6};

/// Seed used to generate the shipped instance for n qubits.
inline constexpr std::uint64_t builtin_seed(std::size_t n) { return 1000 + n; }

/// The shipped instance `qubits_<n>` for n in {3, 4, 5, 6}.
inline QuboInstance builtin_instances(std::size_t n) {
  const char* text = nullptr;
  switch (n) {
    case 3: text = builtin_data::kQubits3; break;
    case 4: text = builtin_data::kQubits4; break;
    case 5: text = builtin_data::kQubits5; break;
    case 6: text = builtin_data::kQubits6; break;
    default:
      throw ValidationError("no built-in instance for n = " + std::to_string(n) +
                            "; built-ins exist for n in {3, 4, 5, 6}");
  }
  if (std::string(text).empty()) {
    throw IoError("built-in instance qubits_" + std::to_string(n) +
                  " was not embedded; generate instances/qubits_" + std::to_string(n) +
                  ".json and re-run cmake");
  }
  return instance_from_json(Json::parse(text));
}

}  // namespace toniq
