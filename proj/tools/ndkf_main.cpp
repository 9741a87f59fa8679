#include <iostream>

#include "ndkf/cli.hpp"

int main(int argc, char **argv) {
    return ndkf::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
