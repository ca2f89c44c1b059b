#include <iostream>
#include <string>
#include <vector>

#include "spinmarket/experiment.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return spinmarket::run_cli(args, std::cout, std::cerr);
}
