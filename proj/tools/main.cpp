#include <iostream>
#include <vector>

#include "regime_mv/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return regime_mv::run_cli(std::move(args), std::cout, std::cerr);
}
