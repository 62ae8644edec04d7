#pragma once

#include <ostream>

namespace compdes {

// Exit codes: 0 success, 1 certification or convergence failure, 2 input
// error, 3 numerical infeasibility. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace compdes
