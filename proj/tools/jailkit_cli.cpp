#include <iostream>
#include <string>
#include <vector>

#include "jailkit/cli.hpp"

int main(int argc, char** argv) {
    return jailkit::cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
