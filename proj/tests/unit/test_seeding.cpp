#include <atomic>
#include <set>
#include <vector>

#include "doctest.h"
#include "stormgen/parallel.hpp"
#include "stormgen/seeding.hpp"

using namespace stormgen;

TEST_SUITE("seeding") {
  TEST_CASE("derived seeds are stable and distinct") {
    CHECK(derive_seed(42, "episode", 3) == derive_seed(42, "episode", 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t master : {0ull, 1ull, 42ull})
      for (const char* stage : {"a", "b", "episode"})
        for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(master, stage, i));
    CHECK(seen.size() == 3 * 3 * 50);
  }

  TEST_CASE("parallel_for visits every index once for any thread count") {
    for (unsigned threads : {1u, 2u, 5u}) {
      set_thread_count(threads);
      std::vector<std::atomic<int>> hits(103);
      parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
      for (auto& h : hits) CHECK(h.load() == 1);
    }
    set_thread_count(1);
  }

  TEST_CASE("parallel_for propagates exceptions") {
    set_thread_count(3);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                      if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
    set_thread_count(1);
  }
}
