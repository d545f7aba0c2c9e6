#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bwflow::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConditionFail = 1;
inline constexpr int kParseError = 2;
inline constexpr int kBlowup = 3;
inline constexpr int kNotConverged = 4;
inline constexpr int kOtherError = 5;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bwflow::cli
