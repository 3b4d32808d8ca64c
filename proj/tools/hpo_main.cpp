#include <string>
#include <vector>

#include "hpo/experiment.hpp"

int main(int argc, char** argv) {
  return hpo::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
