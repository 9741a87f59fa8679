// Command-line front end: train, run, montecarlo, compare, check.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ndkf::cli {

/// `args` excludes the program name. Returns the process exit code; never throws.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace ndkf::cli
