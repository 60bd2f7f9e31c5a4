#pragma once

namespace kacq::cli {

/// Entry point of the kacq tool: 0 on success, 1 on usage errors, 2 on runtime failures.
int run(int argc, const char* const* argv);

}  // namespace kacq::cli
