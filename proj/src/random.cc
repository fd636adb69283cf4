#include "slatejudge/random.h"

#include <numeric>

#include "slatejudge/errors.h"
#include "slatejudge/hashing.h"

namespace slatejudge {

KeyedStream::KeyedStream(std::string_view key) : key_(sha256_u64(key)) {}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
  if (k > n) throw InvalidArgument("cannot sample more indices than available");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + below(n - i)]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace slatejudge
