#include <iostream>
#include <string>
#include <vector>

#include "kernforge/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return kernforge::cli::run(args, std::cout, std::cerr);
}
