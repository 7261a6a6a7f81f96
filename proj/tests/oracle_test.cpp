#include "chronoarray/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

namespace chronoarray {
namespace {

TEST(Oracle, FirstWriteIsVersionOne) {
  ReferenceArray a;
  EXPECT_EQ(a.write(3, 10), 1u);
  EXPECT_EQ(a.write(3, 11), 2u);
  EXPECT_EQ(a.version_count(), 2u);
}

TEST(Oracle, ReadReturnsLatest) {
  ReferenceArray a;
  EXPECT_EQ(a.read(0), std::nullopt);
  a.write(0, 5);
  a.write(1, 6);
  a.write(0, 7);
  EXPECT_EQ(a.read(0), Answer(7));
  EXPECT_EQ(a.read(1), Answer(6));
  EXPECT_EQ(a.read(2), std::nullopt);
}

TEST(Oracle, PredecessorSearch) {
  ReferenceArray a;
  a.write(9, 100);  // @1
  a.write(4, 200);  // @2
  a.write(9, 300);  // @3
  a.write(9, 400);  // @4
  a.write(4, 500);  // @5
  EXPECT_EQ(a.persistent_read(0, 9), std::nullopt);
  EXPECT_EQ(a.persistent_read(1, 9), Answer(100));
  EXPECT_EQ(a.persistent_read(2, 9), Answer(100));
  EXPECT_EQ(a.persistent_read(3, 9), Answer(300));
  EXPECT_EQ(a.persistent_read(5, 9), Answer(400));
  EXPECT_EQ(a.persistent_read(4, 4), Answer(200));
  EXPECT_EQ(a.persistent_read(5, 4), Answer(500));
  EXPECT_EQ(a.persistent_read(1, 4), std::nullopt);
  EXPECT_THROW(a.persistent_read(6, 4), std::out_of_range);
}

TEST(Oracle, LatestVersionMatchesRead) {
  std::mt19937_64 rng(11);
  ReferenceArray a;
  for (int k = 0; k < 400; ++k) {
    a.write(rng() % 32, rng() % 1000);
  }
  for (std::uint64_t i = 0; i < 32; ++i) {
    EXPECT_EQ(a.persistent_read(a.version_count(), i), a.read(i));
  }
}

TEST(Oracle, AnswersStableUnderFurtherWrites) {
  std::mt19937_64 rng(12);
  ReferenceArray a;
  for (int k = 0; k < 200; ++k) a.write(rng() % 16, rng() % 100);
  // Record every (v, i) answer, write more, compare.
  std::vector<Answer> before;
  for (std::uint64_t v = 0; v <= 200; ++v)
    for (std::uint64_t i = 0; i < 16; ++i)
      before.push_back(a.persistent_read(v, i));
  for (int k = 0; k < 100; ++k) a.write(rng() % 16, rng() % 100);
  std::size_t at = 0;
  for (std::uint64_t v = 0; v <= 200; ++v)
    for (std::uint64_t i = 0; i < 16; ++i)
      EXPECT_EQ(a.persistent_read(v, i), before[at++]);
}

// Quadratic replay double-check: the answer at version v is what a plain map
// holds after applying the first v writes from scratch.
TEST(Oracle, AgreesWithFullReplay) {
  std::mt19937_64 rng(13);
  std::vector<std::pair<std::uint64_t, Word>> script;
  ReferenceArray a;
  for (int k = 0; k < 500; ++k) {
    std::uint64_t col = rng() % 24;
    Word val = rng() % 10000;
    script.push_back({col, val});
    a.write(col, val);
  }
  for (std::uint64_t v = 0; v <= 500; v += 7) {
    std::unordered_map<std::uint64_t, Word> state;
    for (std::uint64_t k = 0; k < v; ++k) {
      state[script[k].first] = script[k].second;
    }
    for (std::uint64_t i = 0; i < 24; ++i) {
      auto it = state.find(i);
      Answer expect =
          it == state.end() ? Answer(std::nullopt) : Answer(it->second);
      ASSERT_EQ(a.persistent_read(v, i), expect) << "v=" << v << " i=" << i;
    }
  }
}

}  // namespace
}  // namespace chronoarray
