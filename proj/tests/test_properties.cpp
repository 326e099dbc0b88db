#include <gtest/gtest.h>

#include "invariants.hpp"

namespace pixle {
namespace {

class RandomInstance : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomInstance, AllInvariantsHold) {
  for (std::uint64_t k = 0; k < 25; ++k) {
    const std::uint64_t seed = GetParam() * 1000 + k;
    const auto rep = testing::check_random_instance(seed);
    for (const auto& f : rep.failures) ADD_FAILURE() << "seed " << seed << ": " << f;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomInstance, ::testing::Range<std::uint64_t>(0, 12));

}  // namespace
}  // namespace pixle
