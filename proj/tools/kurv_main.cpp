#include <string>
#include <vector>

#include "kurv/cli.hpp"

int main(int argc, char** argv) {
  return kurv::cli::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
