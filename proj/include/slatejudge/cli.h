#pragma once

// Command-line entry point: validate | plan | run | analyze | report |
// simulate. Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <string>
#include <vector>

namespace slatejudge::cli {

// `args` excludes the program name.
int run(const std::vector<std::string>& args);
int main(int argc, char** argv);

}  // namespace slatejudge::cli
