#pragma once

namespace styleobf {

// Full command-line driver. Exit codes: 0 success, 1 configuration or usage
// error, 2 data error, 3 training divergence.
int run_cli(int argc, const char* const* argv);

}  // namespace styleobf
