#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "splatslam/keyframes.hpp"

using namespace splatslam;

namespace {

std::shared_ptr<Keyframe> make_kf(const VisibleSet& visible,
                                  const SE3Pose& pose = SE3Pose{}) {
  auto kf = std::make_shared<Keyframe>();
  kf->visible = visible;
  kf->pose = pose;
  return kf;
}

VisibleSet random_set(std::mt19937_64& rng, int universe, double density) {
  VisibleSet out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < universe; ++i) {
    if (unit(rng) < density) out.push_back(i);
  }
  return out;
}

}  // namespace

TEST_CASE("covisibility set arithmetic") {
  CHECK(covisibility({1, 2, 3}, {1, 2, 3}).iou == 1.0);
  CHECK(covisibility({1, 2, 3}, {1, 2, 3}).oc == 1.0);

  const Covisibility c = covisibility({1, 2, 3}, {2, 3, 4});
  CHECK(c.iou == doctest::Approx(0.5));
  CHECK(c.oc == doctest::Approx(2.0 / 3.0));

  CHECK(covisibility({1, 2}, {3, 4}).iou == 0.0);
  CHECK(covisibility({1, 2}, {3, 4}).oc == 0.0);
  CHECK(covisibility({}, {}).iou == 0.0);
  CHECK(covisibility({}, {}).oc == 0.0);
}

TEST_CASE("covisibility matches a std::set oracle on random sets") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const VisibleSet a = random_set(rng, 60, 0.3);
    const VisibleSet b = random_set(rng, 60, 0.4);

    std::set<int> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::vector<int> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::back_inserter(inter));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(),
                   std::back_inserter(uni));

    const Covisibility c = covisibility(a, b);
    if (a.empty() && b.empty()) {
      CHECK(c.iou == 0.0);
      continue;
    }
    const double iou = uni.empty() ? 0.0 : double(inter.size()) / uni.size();
    const double oc = std::min(sa.size(), sb.size()) == 0
                          ? 0.0
                          : double(inter.size()) / std::min(sa.size(), sb.size());
    CHECK(c.iou == doctest::Approx(iou).epsilon(1e-15));
    CHECK(c.oc == doctest::Approx(oc).epsilon(1e-15));
    // IOU <= OC <= 1 whenever defined.
    if (!a.empty() || !b.empty()) {
      CHECK(c.iou <= c.oc + 1e-15);
      CHECK(c.oc <= 1.0 + 1e-15);
    }
  }
}

TEST_CASE("registration thresholds at the paper values") {
  KeyframeConfig cfg;  // kf_cov = 0.95, kf_m = 0.04
  // Build sets with a controllable IOU: |inter| / |union|.
  auto sets_with_iou = [](int inter, int only_a, int only_b) {
    VisibleSet a, b;
    int id = 0;
    for (int i = 0; i < inter; ++i) {
      a.push_back(id);
      b.push_back(id);
      ++id;
    }
    for (int i = 0; i < only_a; ++i) a.push_back(id++);
    for (int i = 0; i < only_b; ++i) b.push_back(id++);
    return std::pair{a, b};
  };

  SE3Pose近 = {};
  SE3Pose far;
  SUBCASE("high covisibility, small baseline: no registration") {
    auto [a, b] = sets_with_iou(96, 2, 2);  // IOU = 0.96
    SE3Pose p;
    p.translation = Eigen::Vector3d(0.01, 0, 0);
    const auto d = should_register(a, b, p, SE3Pose{}, 1.0, cfg);
    CHECK_FALSE(d.should_register);
  }
  SUBCASE("covisibility below kf_cov registers") {
    auto [a, b] = sets_with_iou(94, 3, 3);  // IOU = 0.94
    const auto d = should_register(a, b, SE3Pose{}, SE3Pose{}, 1.0, cfg);
    CHECK(d.should_register);
    CHECK(d.reason == "covisibility");
  }
  SUBCASE("baseline above kf_m times median depth registers") {
    auto [a, b] = sets_with_iou(99, 0, 1);  // IOU = 0.99
    SE3Pose p;
    p.translation = Eigen::Vector3d(0.05, 0, 0);  // 0.05 > 0.04 * 1.0
    const auto d = should_register(a, b, p, SE3Pose{}, 1.0, cfg);
    CHECK(d.should_register);
    CHECK(d.reason == "baseline");
  }
  SUBCASE("boundary cases are strict inequalities") {
    auto [a, b] = sets_with_iou(95, 5, 0);  // IOU exactly 0.95
    CHECK_FALSE(should_register(a, b, SE3Pose{}, SE3Pose{}, 1.0, cfg)
                    .should_register);
    SE3Pose p;
    p.translation = Eigen::Vector3d(0.04, 0, 0);  // exactly kf_m * depth
    CHECK_FALSE(should_register(a, b, p, SE3Pose{}, 1.0, cfg).should_register);
  }
}

TEST_CASE("should_register is monotone in IOU and baseline") {
  KeyframeConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int inter = static_cast<int>(unit(rng) * 100);
    const int extra = static_cast<int>(unit(rng) * 20) + 1;
    VisibleSet a, b;
    for (int i = 0; i < inter; ++i) {
      a.push_back(i);
      b.push_back(i);
    }
    for (int i = 0; i < extra; ++i) b.push_back(inter + i);
    SE3Pose p;
    p.translation = Eigen::Vector3d(unit(rng) * 0.1, 0, 0);
    const double depth = 0.5 + unit(rng);

    const bool registered =
        should_register(a, b, p, SE3Pose{}, depth, cfg).should_register;
    if (registered) {
      // Decreasing IOU (removing an intersection element from a) keeps it.
      VisibleSet a2 = a;
      if (!a2.empty()) a2.pop_back();
      CHECK(should_register(a2, b, p, SE3Pose{}, depth, cfg).should_register);
      // Increasing the baseline keeps it.
      SE3Pose p2 = p;
      p2.translation *= 2.0;
      CHECK(should_register(a, b, p2, SE3Pose{}, depth, cfg).should_register);
    }
  }
}

TEST_CASE("window maintenance evicts by overlap coefficient") {
  KeyframeConfig cfg;  // kf_c = 0.3
  KeyframeRegistry registry;
  KeyframeWindow window;
  window.capacity = 10;

  SUBCASE("no eviction when every OC stays above the cutoff") {
    registry.add(make_kf({1, 2, 3, 4}));
    registry.add(make_kf({1, 2, 3}));
    registry.add(make_kf({1, 2, 3, 4}));
    window.ids = {0, 1, 2};
    CHECK(maintain_window(window, registry, cfg).empty());
    CHECK(window.ids == std::vector<int>{0, 1, 2});
  }

  SUBCASE("an entry with OC below 0.3 is evicted") {
    registry.add(make_kf({10, 11, 12, 13, 14}));  // OC with latest = 0.2
    registry.add(make_kf({1, 2, 3, 4}));
    registry.add(make_kf({10, 1, 2, 3, 4}));  // latest
    window.ids = {0, 1, 2};
    const auto evicted = maintain_window(window, registry, cfg);
    CHECK(evicted == std::vector<int>{0});
    CHECK(window.ids == std::vector<int>{1, 2});
  }

  SUBCASE("over capacity evicts exactly the minimum-OC entry") {
    window.capacity = 2;
    registry.add(make_kf({1, 2, 3, 4}));      // OC 0.75 with latest
    registry.add(make_kf({1, 2, 3, 9}));      // OC 0.75
    registry.add(make_kf({1, 2, 9, 10}));     // OC 0.5 -> evicted
    registry.add(make_kf({1, 2, 3, 4, 5}));   // latest
    window.ids = {0, 1, 2, 3};
    const auto evicted = maintain_window(window, registry, cfg);
    REQUIRE(evicted.size() == 2);  // capacity 2: two evictions, worst first
    CHECK(evicted[0] == 2);
    CHECK(window.ids.back() == 3);
    CHECK(window.ids.size() == 2);
  }

  SUBCASE("the latest keyframe is never evicted") {
    window.capacity = 1;
    registry.add(make_kf({1}));
    registry.add(make_kf({2}));  // latest, disjoint from everything
    window.ids = {0, 1};
    const auto evicted = maintain_window(window, registry, cfg);
    CHECK(window.ids == std::vector<int>{1});
    CHECK(std::find(evicted.begin(), evicted.end(), 1) == evicted.end());
  }
}

TEST_CASE("random past sampling is uniform and excludes the window") {
  KeyframeRegistry registry;
  KeyframeWindow window;
  window.capacity = 4;

  SUBCASE("no candidates outside the window") {
    registry.add(make_kf({1}));
    registry.add(make_kf({2}));
    window.ids = {0, 1};
    std::mt19937_64 rng(1);
    CHECK(sample_random_past(registry, window, rng).empty());
  }

  SUBCASE("exactly two candidates are both selected") {
    for (int i = 0; i < 4; ++i) registry.add(make_kf({i}));
    window.ids = {2, 3};
    std::mt19937_64 rng(1);
    auto picked = sample_random_past(registry, window, rng);
    std::sort(picked.begin(), picked.end());
    CHECK(picked == std::vector<int>{0, 1});
  }

  SUBCASE("fixed seed reproduces and frequencies are uniform") {
    for (int i = 0; i < 104; ++i) registry.add(make_kf({i}));
    window.ids = {100, 101, 102, 103};

    std::mt19937_64 rng_a(99), rng_b(99);
    CHECK(sample_random_past(registry, window, rng_a) ==
          sample_random_past(registry, window, rng_b));

    std::mt19937_64 rng(7);
    std::vector<int> hits(100, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      for (int id : sample_random_past(registry, window, rng)) {
        REQUIRE(id < 100);
        ++hits[id];
      }
    }
    // Each of the 100 candidates is hit with p = 2/100 per draw.
    const double expected = draws * 2.0 / 100.0;
    const double sigma = std::sqrt(draws * (2.0 / 100.0) * (98.0 / 100.0));
    for (int id = 0; id < 100; ++id) {
      CHECK(std::abs(hits[id] - expected) < 3.0 * sigma + 1.0);
    }
  }
}
