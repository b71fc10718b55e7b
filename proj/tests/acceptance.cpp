// Prints one PASS/FAIL line per acceptance criterion; optional arguments select criteria by number.
#include <cstdlib>
#include <iostream>
#include <string>

#include "hslpp/experiments.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  const auto results = hslpp::run_acceptance(ids, 1, 1, &std::cout);
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
