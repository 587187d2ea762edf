#pragma once

namespace dagaf {

// Entry point for the `dagaf` tool; returns the process exit code.
int runCli(int argc, const char* const* argv);

}  // namespace dagaf
