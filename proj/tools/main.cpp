#include <iostream>
#include <string>
#include <vector>

#include "deadzone/cli.hpp"

int main(int argc, char** argv) {
  return deadzone::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout,
                           std::cerr);
}
