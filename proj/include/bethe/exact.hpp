#pragma once

#include "bethe/logvalue.hpp"
#include "bethe/matrix.hpp"

namespace bethe {

// Sum over all n! permutations of the diagonal products. Ground-truth oracle;
// n <= 10 keeps it under a second.
LogValue perm_bruteforce(const NonNegMatrix& m);

// Ryser inclusion-exclusion with Gray-code subset iteration, Theta(n * 2^n).
// Rows are pre-scaled by their maximum entry (log factors folded back into
// the result) so partial products stay within double range; n <= 30.
//
// threads > 1 partitions the 2^n subset range into contiguous chunks with one
// accumulator each, merged in chunk order. The result is deterministic for a
// fixed thread count but may differ across counts in the last bits because
// floating-point summation order changes; threads = 1 is the reference order.
LogValue perm_ryser(const NonNegMatrix& m, int threads = 1);

}  // namespace bethe
