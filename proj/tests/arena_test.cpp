#include "chronoarray/arena.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace chronoarray {
namespace {

TEST(Arena, PacksRegionsInPlanOrder) {
  Arena a({{"GLOBALS", 8}, {"C_ARRAY", 16}});
  EXPECT_EQ(a.region("GLOBALS").base, 0u);
  EXPECT_EQ(a.region("GLOBALS").length, 8u);
  EXPECT_EQ(a.region("C_ARRAY").base, 8u);
  EXPECT_EQ(a.region("C_ARRAY").length, 16u);
  EXPECT_EQ(a.total_words(), 24u);
  EXPECT_EQ(a.trace_size(), 0u);
}

TEST(Arena, DuplicateLabelRejected) {
  EXPECT_THROW(Arena({{"A", 4}, {"A", 4}}), std::invalid_argument);
}

TEST(Arena, ZeroLengthRegionAllowed) {
  Arena a({{"A", 0}, {"B", 4}});
  EXPECT_EQ(a.region("B").base, 0u);
  EXPECT_EQ(a.total_words(), 4u);
}

TEST(Arena, LoadStoreRoundTripWithTrace) {
  Arena a({{"A", 8}});
  a.store(3, 7, OpClass::kWrite);
  EXPECT_EQ(a.load(3, OpClass::kRead), 7u);
  AccessTrace t = a.take_trace();
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].address, 3u);
  EXPECT_EQ(t[0].kind, AccessKind::kStore);
  EXPECT_EQ(t[0].op_class, OpClass::kWrite);
  EXPECT_EQ(t[1].address, 3u);
  EXPECT_EQ(t[1].kind, AccessKind::kLoad);
  EXPECT_EQ(t[1].op_class, OpClass::kRead);
  EXPECT_TRUE(a.take_trace().empty());
}

TEST(Arena, FreshWordsReadZero) {
  Arena a({{"A", 4}});
  EXPECT_EQ(a.load(0, OpClass::kRead), 0u);
}

TEST(Arena, OutOfRangeAccessThrows) {
  Arena a({{"A", 4}});
  EXPECT_THROW(a.load(4, OpClass::kRead), std::out_of_range);
  EXPECT_THROW(a.store(100, 1, OpClass::kWrite), std::out_of_range);
}

TEST(Arena, PeekAndPokeAreUntraced) {
  Arena a({{"A", 4}});
  a.poke(2, 11);
  EXPECT_EQ(a.peek(2), 11u);
  EXPECT_EQ(a.trace_size(), 0u);
}

// Replaying the stores of a drained trace against a zeroed shadow must
// land on the arena's final contents, and the trace length must equal the
// number of calls made since the last drain.
TEST(Arena, TraceReplayReproducesContents) {
  std::mt19937_64 rng(20240817);
  Arena a({{"A", 64}, {"B", 64}});
  std::uint64_t calls = 0;
  for (int i = 0; i < 2000; ++i) {
    Addr addr = rng() % a.total_words();
    if (rng() % 2) {
      a.store(addr, rng(), static_cast<OpClass>(rng() % 4));
    } else {
      a.load(addr, static_cast<OpClass>(rng() % 4));
    }
    ++calls;
  }
  AccessTrace t = a.take_trace();
  ASSERT_EQ(t.size(), calls);
  std::vector<Word> shadow(a.total_words(), 0);
  std::vector<Word> final = a.snapshot();
  for (const auto& ev : t) {
    ASSERT_LT(ev.address, shadow.size());
    if (ev.kind == AccessKind::kStore) {
      // The trace records addresses, not payloads; replay takes values from
      // the arena itself, asserting the address stream covers every change.
      shadow[ev.address] = final[ev.address];
    }
  }
  // Every word that differs from zero must have been stored at least once.
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    EXPECT_EQ(shadow[i], final[i]) << "address " << i;
  }
}

TEST(Arena, GrowPreservesPayloadsAndReportsMoves) {
  Arena a({{"A", 4}, {"B", 4}, {"C", 4}});
  for (Addr i = 0; i < 12; ++i) a.poke(i, 100 + i);
  a.take_trace();
  auto moves = a.grow_region("A", 8);
  ASSERT_EQ(moves.size(), 2u);
  EXPECT_EQ(moves[0].old_base, 4u);
  EXPECT_EQ(moves[0].new_base, 8u);
  EXPECT_EQ(moves[0].length, 4u);
  EXPECT_EQ(moves[1].old_base, 8u);
  EXPECT_EQ(moves[1].new_base, 12u);
  EXPECT_EQ(moves[1].length, 4u);
  EXPECT_EQ(a.region("A").length, 8u);
  EXPECT_EQ(a.region("B").base, 8u);
  EXPECT_EQ(a.region("C").base, 12u);
  EXPECT_EQ(a.total_words(), 16u);
  // Payloads of B and C survive at their new bases.
  for (Addr i = 0; i < 4; ++i) {
    EXPECT_EQ(a.peek(8 + i), 104 + i);
    EXPECT_EQ(a.peek(12 + i), 108 + i);
  }
  // A's original words stay, the grown tail reads zero.
  for (Addr i = 0; i < 4; ++i) EXPECT_EQ(a.peek(i), 100 + i);
  for (Addr i = 4; i < 8; ++i) EXPECT_EQ(a.peek(i), 0u);
  // Each moved word costs one maintenance load and one maintenance store.
  AccessTrace t = a.take_trace();
  ASSERT_EQ(t.size(), 16u);
  for (const auto& ev : t) EXPECT_EQ(ev.op_class, OpClass::kMaintenance);
}

TEST(Arena, GrowLastRegionMovesNothing) {
  Arena a({{"A", 4}, {"B", 4}});
  auto moves = a.grow_region("B", 16);
  EXPECT_TRUE(moves.empty());
  EXPECT_EQ(a.trace_size(), 0u);
  EXPECT_EQ(a.total_words(), 20u);
}

TEST(Arena, GrowRejectsShrink) {
  Arena a({{"A", 4}});
  EXPECT_THROW(a.grow_region("A", 2), std::invalid_argument);
  EXPECT_TRUE(a.grow_region("A", 4).empty());
}

TEST(Arena, GrowEnforcesBudget) {
  Arena a({{"A", 4}}, /*max_words=*/16);
  EXPECT_THROW(a.grow_region("A", 32), std::length_error);
  EXPECT_THROW(Arena({{"A", 32}}, /*max_words=*/16), std::length_error);
}

TEST(Arena, UnknownLabelThrows) {
  Arena a({{"A", 4}});
  EXPECT_THROW(a.region("B"), std::invalid_argument);
  EXPECT_THROW(a.grow_region("B", 8), std::invalid_argument);
}

TEST(Arena, ResetRegionsZeroesContentsAndKeepsTrace) {
  Arena a({{"A", 4}});
  a.store(0, 9, OpClass::kWrite);
  a.reset_regions({{"A", 2}, {"B", 2}});
  EXPECT_EQ(a.peek(0), 0u);
  EXPECT_EQ(a.region("B").base, 2u);
  EXPECT_EQ(a.trace_size(), 1u);  // pending events survive a reset
}

TEST(TraceDump, RoundTripsBinaryRecords) {
  AccessTrace t;
  t.push_back({0, AccessKind::kLoad, OpClass::kRead});
  t.push_back({0x1122334455667788ull, AccessKind::kStore, OpClass::kMaintenance});
  t.push_back({42, AccessKind::kStore, OpClass::kPersistentRead});
  std::stringstream ss;
  write_trace_dump(t, ss);
  EXPECT_EQ(ss.str().size(), 30u);  // 10 bytes per event
  // Little-endian address bytes of the second record.
  EXPECT_EQ(static_cast<unsigned char>(ss.str()[10]), 3u);  // maint
  EXPECT_EQ(static_cast<unsigned char>(ss.str()[11]), 1u);  // store
  EXPECT_EQ(static_cast<unsigned char>(ss.str()[12]), 0x88);
  EXPECT_EQ(static_cast<unsigned char>(ss.str()[19]), 0x11);
  AccessTrace back = read_trace_dump(ss);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].address, t[i].address);
    EXPECT_EQ(back[i].kind, t[i].kind);
    EXPECT_EQ(back[i].op_class, t[i].op_class);
  }
}

TEST(TraceDump, RejectsCorruptAndTruncatedInput) {
  std::string bad(10, '\0');
  bad[0] = 9;  // no such op class
  std::stringstream ss(bad);
  EXPECT_THROW(read_trace_dump(ss), std::runtime_error);
  std::stringstream truncated(std::string(7, '\0'));
  EXPECT_THROW(read_trace_dump(truncated), std::runtime_error);
}

}  // namespace
}  // namespace chronoarray
