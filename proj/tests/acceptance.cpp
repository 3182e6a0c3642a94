#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "acceptance.hpp"

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& r : rescomp::app::run_acceptance(only)) {
    std::printf("%s %2d %-26s %8.2fs (budget %.0fs)  %s\n", r.pass() ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                r.budget_seconds, r.detail.c_str());
    std::fflush(stdout);
    failed += !r.pass();
  }
  return failed == 0 ? 0 : 1;
}
