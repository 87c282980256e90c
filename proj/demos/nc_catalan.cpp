// Prints the noncrossing partitions of {1..n} and checks the count against
// the Catalan number.

#include <cstdlib>
#include <iostream>

#include "freeprob/ncpart.hpp"

int main(int argc, char** argv) {
    int n = argc > 1 ? std::atoi(argv[1]) : 4;
    auto parts = freeprob::ncpart::enumerate_noncrossing(n);
    for (const auto& p : parts) std::cout << p.str() << "\n";
    std::cout << parts.size() << " partitions, catalan(" << n
              << ") = " << freeprob::ncpart::catalan(n) << "\n";
    return 0;
}
