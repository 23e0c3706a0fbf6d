#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pofmkl/rng.hpp"

using namespace pofmkl;

// Known-answer vectors published with the Random123 library.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(CounterRng, SameKeySameStream) {
  const auto key = StreamKey::derive(7, 3, StreamPurpose::SpectralSamples);
  CounterRng a(key), b(key);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(CounterRng, PurposesAndSubstreamsDiffer) {
  const auto k1 = StreamKey::derive(7, 3, StreamPurpose::SpectralSamples);
  const auto k2 = StreamKey::derive(7, 3, StreamPurpose::SubsetSelection);
  const auto k3 = StreamKey::derive(7, 4, StreamPurpose::SpectralSamples);
  EXPECT_NE(k1.value, k2.value);
  EXPECT_NE(k1.value, k3.value);
  CounterRng a(k1, 0), b(k1, 1);
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(CounterRng, UniformInOpenInterval) {
  CounterRng rng(StreamKey::derive(1, 0, StreamPurpose::SynthInputs));
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // mean 1/2, sd of the mean sqrt(1/12/n)
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(CounterRng, NormalMoments) {
  CounterRng rng(StreamKey::derive(2, 0, StreamPurpose::SynthNoise));
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(CounterRng, UniformIndexCoversRange) {
  CounterRng rng(StreamKey::derive(3, 0, StreamPurpose::Partition));
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto r = rng.uniform_index(7);
    ASSERT_LT(r, 7u);
    ++counts[r];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
  EXPECT_EQ(rng.uniform_index(1), 0u);
}

TEST(CounterRng, NoRepeatsInShortRun) {
  CounterRng rng(StreamKey::derive(0, 0, StreamPurpose::SpectralSamples));
  const auto first = rng.next_u64();
  CounterRng again(StreamKey::derive(0, 0, StreamPurpose::SpectralSamples));
  EXPECT_EQ(first, again.next_u64());
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(rng.next_u64());
  EXPECT_EQ(seen.size(), 1000u);
}
