#include <iostream>

int main() {
  std::cout << "gridmm: CLI under construction\n";
  return 0;
}
