#include <iostream>
#include <string>
#include <vector>

#include "gedprobe/cli.hpp"

int main(int argc, char** argv) {
  return gedprobe::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
