#include <iostream>

#include "bsdr_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bsdr::cli::run(args, std::cerr);
}
