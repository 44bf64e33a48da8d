#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kernforge::cli {

// Exit codes: 0 success, 1 some item rejected or failed, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the executable and the tests. args[0] is the
// program name. JSONL reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kernforge::cli
