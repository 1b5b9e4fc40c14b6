#include <iostream>
#include <string>
#include <vector>

#include "causa/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return causa::cli::run(args, std::cout, std::cerr);
}
