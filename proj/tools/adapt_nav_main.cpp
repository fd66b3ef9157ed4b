#include <string>
#include <vector>

#include "adaptnav/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return adaptnav::run_cli(std::move(args));
}
