#pragma once

namespace hv::cli {

/// Entry point behind the `hydrovision` binary; exposed so tests can drive
/// commands in-process. Exit codes: 0 success, 1 usage/config error,
/// 2 data error, 3 runtime error.
int run(int argc, const char* const* argv);

} // namespace hv::cli
