#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace motraj::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitRegistration = 4;

inline constexpr const char* kVersion = "motraj 0.1.0";

// Entry point behind the executable; args excludes the program name.
// Diagnostics go to `err` as single-line key=value records.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace motraj::cli
