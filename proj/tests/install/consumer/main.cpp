#include <cstdio>
#include "stathm/dirichlet.hpp"
int main() {
  stathm::TruncatedDomain d;
  d.N = 8;
  std::printf("%.9f\n", stathm::exact_point_measure(stathm::green_field(d), {0, 0}));
}
