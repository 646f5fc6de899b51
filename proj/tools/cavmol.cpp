#include "cavmol/cli.hpp"

int main(int argc, char** argv) {
  return cavmol::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
