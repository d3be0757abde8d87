#include <cstdlib>
#include <iostream>
#include <vector>

#include "heom/validate.hpp"

// Runs the full acceptance suite (or the criteria given as arguments) and
// prints one pass/fail line per criterion.
int main(int argc, char** argv) {
  std::vector<int> criteria;
  for (int i = 1; i < argc; ++i) criteria.push_back(std::atoi(argv[i]));
  try {
    const auto results = heom::run_validation(criteria, &std::cout);
    return heom::print_validation_report(results, std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
