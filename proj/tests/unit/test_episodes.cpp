#include <cmath>
#include <stdexcept>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"
#include "stormgen/episodes.hpp"
#include "stormgen/errors.hpp"

using namespace stormgen;

namespace {

SpaceTimeData noisy_record(std::uint64_t seed, std::size_t n_sites, std::size_t n_steps, double wet = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 5000.0), unif(0.0, 1.0);
  std::exponential_distribution<double> amount(1.0);
  std::vector<Site> sites;
  for (std::size_t s = 0; s < n_sites; ++s) {
    sites.push_back({"S" + std::to_string(100 + s), {std::round(pos(rng)), std::round(pos(rng))}});
  }
  SpaceTimeData d(sites, n_steps, 0, 300);
  for (std::size_t t = 0; t < n_steps; ++t) {
    for (std::size_t s = 0; s < n_sites; ++s) {
      const double r = unif(rng);
      d.at(t, s) = r < 0.02 ? kMissing : r < 0.02 + wet ? amount(rng) : 0.0;
    }
  }
  return d;
}

}  // namespace

TEST_SUITE("episodes") {
  TEST_CASE("threshold is the empirical quantile of positive values") {
    SpaceTimeData d({{"a", {0, 0}}, {"b", {1, 0}}}, 4);
    const double v[] = {0.0, 1.0, 2.0, kMissing, 3.0, 0.0, 4.0, 5.0};
    std::copy(std::begin(v), std::end(v), d.values().begin());
    CHECK(threshold_from_quantile(d, 0.4) == 2.0);  // positives 1..5
    CHECK(threshold_from_quantile(d, 0.4, {.positive_only = false}) == 1.0);  // 0,0,1,2,3,4,5
    SpaceTimeData dry({{"a", {0, 0}}}, 3);
    CHECK_THROWS_AS(threshold_from_quantile(dry, 0.9), DataError);
  }

  TEST_CASE("selection equals a brute-force greedy scan (property)") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto d = noisy_record(seed, 3 + seed % 6, 200);
      const double u = 2.0;
      EpisodeConfig cfg;
      cfg.delta = 1 + static_cast<int>(seed % 7);
      cfg.min_separation = 500.0 * static_cast<double>(seed % 5);
      const auto cat = select_episodes(d, u, cfg);

      // Brute force: site order by id, compare to every kept episode.
      std::vector<std::size_t> order(d.n_sites());
      for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return d.sites()[a].id < d.sites()[b].id; });
      std::vector<std::pair<std::int64_t, std::size_t>> kept;
      for (std::size_t t = 0; t < d.n_steps(); ++t) {
        for (std::size_t s : order) {
          const double x = d.at(t, s);
          if (std::isnan(x) || !(x > u)) continue;
          bool ok = true;
          for (auto [t0, s0] : kept) {
            const double dist = distance(d.sites()[s].pos, d.sites()[s0].pos);
            if (dist < cfg.min_separation && std::llabs(static_cast<std::int64_t>(t) - t0) < cfg.delta) ok = false;
          }
          if (ok) kept.push_back({static_cast<std::int64_t>(t), s});
        }
      }
      REQUIRE(cat.episodes.size() == kept.size());
      for (std::size_t i = 0; i < kept.size(); ++i) {
        CHECK(cat.episodes[i].t0 == kept[i].first);
        CHECK(cat.episodes[i].site == kept[i].second);
        CHECK(cat.episodes[i].id == static_cast<int>(i) + 1);
      }
    }
  }

  TEST_CASE("kept episodes satisfy the separation rule pairwise (property)") {
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
      const auto d = noisy_record(seed, 8, 300);
      EpisodeConfig cfg;
      cfg.delta = 6;
      cfg.min_separation = 1500.0;
      const auto cat = select_episodes(d, 1.5, cfg);
      for (std::size_t i = 0; i < cat.episodes.size(); ++i) {
        const auto& a = cat.episodes[i];
        CHECK(d.at(static_cast<std::size_t>(a.t0), a.site) > 1.5);
        CHECK(count_exceedances(a, 1.5) >= 1);
        for (std::size_t j = i + 1; j < cat.episodes.size(); ++j) {
          const auto& b = cat.episodes[j];
          const bool far = distance(d.sites()[a.site].pos, d.sites()[b.site].pos) >= cfg.min_separation;
          CHECK((far || std::llabs(a.t0 - b.t0) >= cfg.delta));
        }
      }
    }
  }

  TEST_CASE("windows copy the data and pad past the record with NaN") {
    const auto d = noisy_record(5, 4, 20, 0.9);
    EpisodeConfig cfg;
    cfg.delta = 8;
    cfg.min_separation = 0.0;
    const auto cat = select_episodes(d, 0.5, cfg);
    REQUIRE(!cat.episodes.empty());
    const Episode& last = cat.episodes.back();
    for (int tau = 0; tau < 8; ++tau) {
      for (std::size_t s = 0; s < 4; ++s) {
        const auto t = last.t0 + tau;
        const double w = last.value(tau, s, 4);
        if (t >= 20) {
          CHECK(std::isnan(w));
        } else if (std::isnan(d.at(static_cast<std::size_t>(t), s))) {
          CHECK(std::isnan(w));
        } else {
          CHECK(w == d.at(static_cast<std::size_t>(t), s));
        }
      }
    }
  }

  TEST_CASE("max_episodes truncates the chronological catalog") {
    const auto d = noisy_record(6, 5, 400);
    EpisodeConfig cfg;
    cfg.delta = 3;
    cfg.min_separation = 100.0;
    const auto full = select_episodes(d, 1.0, cfg);
    cfg.max_episodes = 4;
    const auto cut = select_episodes(d, 1.0, cfg);
    REQUIRE(full.episodes.size() > 4);
    REQUIRE(cut.episodes.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(cut.episodes[i].t0 == full.episodes[i].t0);
  }

  TEST_CASE("exact lag classes hold one distance each") {
    const std::vector<Site> sites{{"a", {0, 0}}, {"b", {3, 4}}, {"c", {6, 8}}, {"d", {0, 5}}};
    const auto c = exact_lag_classes(sites, 2);
    // Distinct distances: 0, 5, 10, sqrt(45), sqrt(9+1)
    CHECK(c.spatial.size() == 5);
    CHECK(c.spatial_class(0.0) == 0);
    CHECK(c.spatial_class(5.0) >= 0);
    CHECK(c.spatial_class(6.9) == 3);
    CHECK(c.spatial_class(11.0) == -1);
    CHECK(c.size() == 5 * 3);
  }

  TEST_CASE("equal-count bins cover every positive distance") {
    const auto d = noisy_record(8, 15, 1);
    const auto c = equal_count_lag_classes(d.sites(), 4, 3);
    CHECK(c.spatial.front().lo == 0.0);
    for (std::size_t a = 0; a < 15; ++a)
      for (std::size_t b = 0; b < 15; ++b) CHECK(c.spatial_class(distance(d.sites()[a].pos, d.sites()[b].pos)) >= 0);
  }

  TEST_CASE("joint exceedance counts equal a brute-force tally (property)") {
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
      const auto d = noisy_record(seed, 6, 150, 0.5);
      EpisodeConfig cfg;
      cfg.delta = 5;
      cfg.min_separation = 1000.0;
      const double u = 1.2;
      const auto cat = select_episodes(d, u, cfg);
      const auto classes = equal_count_lag_classes(d.sites(), 3, 3);
      for (bool incl : {false, true}) {
        const auto table = count_joint_exceedances(cat, u, classes, {.include_conditioning = incl});
        std::map<std::pair<int, int>, std::pair<long, long>> ref;
        for (const auto& e : cat.episodes) {
          for (int tau = 0; tau <= 3; ++tau) {
            const auto t = e.t0 + tau;
            if (t >= 150) continue;
            for (std::size_t s = 0; s < 6; ++s) {
              if (!incl && tau == 0 && s == e.site) continue;
              const double x = d.at(static_cast<std::size_t>(t), s);
              if (std::isnan(x)) continue;
              const int k = classes.spatial_class(distance(d.sites()[s].pos, d.sites()[e.site].pos));
              auto& cell = ref[{k, tau}];
              cell.second++;
              cell.first += x > u;
            }
          }
        }
        for (std::size_t k = 0; k < classes.spatial.size(); ++k) {
          for (int tau = 0; tau <= 3; ++tau) {
            const auto& cell = table.at(k, tau);
            const auto it = ref.find({static_cast<int>(k), tau});
            const long kk = it == ref.end() ? 0 : it->second.first;
            const long nn = it == ref.end() ? 0 : it->second.second;
            CHECK(cell.successes == kk);
            CHECK(cell.trials == nn);
          }
        }
      }
    }
  }

  TEST_CASE("exceedance profile counts pairs that are both observed") {
    const auto d = noisy_record(70, 4, 120);
    const auto rows = exceedance_count_profile(d, 1.0, 2);
    CHECK(rows.size() == 6 + 2);
    const auto& r = rows.front();
    long pairs = 0, joint = 0;
    for (std::size_t t = 0; t < 120; ++t) {
      const double a = d.at(t, r.site_a), b = d.at(t, r.site_b);
      if (std::isnan(a) || std::isnan(b)) continue;
      ++pairs;
      joint += a > 1.0 && b > 1.0;
    }
    CHECK(r.pairs == pairs);
    CHECK(r.joint == joint);
  }

  TEST_CASE("tradeoff grid: fewer episodes with stricter separation (property)") {
    const auto d = noisy_record(80, 10, 500);
    const std::vector<int> deltas{3, 6, 12};
    const std::vector<double> dmins{0.0, 1000.0, 3000.0};
    const auto rows = episode_tradeoff(d, 1.0, deltas, dmins);
    REQUIRE(rows.size() == 9);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(rows[i * 3].n_episodes >= rows[i * 3 + 1].n_episodes);
      CHECK(rows[i * 3 + 1].n_episodes >= rows[i * 3 + 2].n_episodes);
    }
  }
}
