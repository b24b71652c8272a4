#include <catch2/catch_amalgamated.hpp>

#include "capnet/sampler.hpp"
#include "test_util.hpp"

using namespace capnet;

namespace {
SamplerConfig cfg(Rational d, int f, Rational w, int s) {
  SamplerConfig c;
  c.d = d;
  c.f = f;
  c.w = w;
  c.s = s;
  return c;
}
}  // namespace

TEST_CASE("rational parsing", "[sampler]") {
  CHECK(parse_rational("1/3") == Rational(1, 3));
  CHECK(parse_rational("3") == Rational(3, 1));
  CHECK(parse_rational("0.5") == Rational(1, 2));
  CHECK(parse_rational("-0.25") == Rational(-1, 4));
  CHECK(parse_rational("2/6") == Rational(1, 3));
  CHECK_THROWS_AS(parse_rational("x"), ConfigError);
  CHECK_THROWS_AS(parse_rational("1/0"), ConfigError);
  CHECK(Rational(1, 3).str() == "1/3");
  CHECK(Rational(3, 1).str() == "3");
}

TEST_CASE("build_offsets fixtures", "[sampler]") {
  CHECK(build_offsets(cfg({1, 3}, 30, {3, 1}, 10)) ==
        std::vector<std::int64_t>{-90, -80, -70, -60, -50, -40, -30, -20, -10});
  CHECK(build_offsets(cfg({1, 3}, 30, {1, 1}, 10)) ==
        std::vector<std::int64_t>{-30, -20, -10});
  // f(w-d) = 0 collapses the range to n = 0
  CHECK(build_offsets(cfg({1, 3}, 30, {1, 3}, 10)) == std::vector<std::int64_t>{-10});
}

TEST_CASE("config validation names the violated constraint", "[sampler]") {
  const auto message_of = [](const SamplerConfig& c) {
    try {
      c.validate();
      return std::string();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
  };
  CHECK(message_of(cfg({1, 3}, 30, {5, 2}, 10)).find("divisible") != std::string::npos);
  CHECK(message_of(cfg({1, 7}, 30, {3, 1}, 10)).find("f*d") != std::string::npos);
  CHECK(message_of(cfg({1, 3}, 30, {10, 7}, 10)).find("f*w") != std::string::npos);
  CHECK(message_of(cfg({2, 1}, 30, {1, 1}, 10)).find("d <= w") != std::string::npos);
  CHECK(message_of(cfg({1, 3}, 0, {3, 1}, 10)).find("frame rate") != std::string::npos);
  CHECK(message_of(cfg({1, 3}, 30, {3, 1}, -1)).find("stride") != std::string::npos);
}

TEST_CASE("sample_window nominal and fallback behavior", "[sampler]") {
  const SamplerConfig defaults;

  SECTION("all frames present: identity fill") {
    const auto video = testutil::make_video("v", 300);
    const auto w = sample_window(video, 100, defaults);
    REQUIRE(w.has_value());
    std::vector<std::int64_t> got;
    for (const auto& slot : w->slots) got.push_back(slot.frame_index);
    CHECK(got == std::vector<std::int64_t>{10, 20, 30, 40, 50, 60, 70, 80, 90});
    CHECK(w->target_frame == 100);
    CHECK(w->label == video.labels.at(100).value);
  }

  SECTION("newest slot falls back one frame") {
    const auto video = testutil::make_video("v", 300, {90});
    const auto w = sample_window(video, 100, defaults);
    REQUIRE(w.has_value());
    std::vector<std::int64_t> got;
    for (const auto& slot : w->slots) got.push_back(slot.frame_index);
    CHECK(got == std::vector<std::int64_t>{10, 20, 30, 40, 50, 60, 70, 80, 89});
  }

  SECTION("fallback picks the nearest existing index in range") {
    const auto video = testutil::make_video("v", 300, {90, 89, 88});
    const auto w = sample_window(video, 100, defaults);
    REQUIRE(w.has_value());
    CHECK(w->slots.back().frame_index == 87);
    // range is 90..81 inclusive; dropping all of it kills the window
    const auto video2 =
        testutil::make_video("v", 300, {90, 89, 88, 87, 86, 85, 84, 83, 82, 81});
    CHECK_FALSE(sample_window(video2, 100, defaults).has_value());
  }

  SECTION("the oldest slot has no fallback") {
    const auto video = testutil::make_video("v", 300, {10});
    CHECK_FALSE(sample_window(video, 100, defaults).has_value());
    // even though frame 9 exists
    CHECK(video.frames.count(9) == 1);
  }

  SECTION("invalid or absent label is Insufficient") {
    const auto video = testutil::make_video("v", 300, {}, {100});
    CHECK_FALSE(sample_window(video, 100, defaults).has_value());
    CHECK_FALSE(sample_window(video, 500, defaults).has_value());
  }

  SECTION("frame rate mismatch is an error") {
    const auto video = testutil::make_video("v", 300, {}, {}, 25);
    CHECK_THROWS_AS(sample_window(video, 100, defaults), ConfigError);
  }
}

TEST_CASE("enumerate_windows counts", "[sampler]") {
  const auto video = testutil::make_video("v", 300);

  SECTION("defaults: 210 windows, targets 91..300") {
    const auto windows = enumerate_windows(video, SamplerConfig{});
    REQUIRE(windows.size() == 210);
    CHECK(windows.front().target_frame == 91);
    CHECK(windows.back().target_frame == 300);
    for (const auto& w : windows) CHECK(w.slots.size() == 9);
  }

  SECTION("w=2: 240 windows") {
    const auto windows = enumerate_windows(video, cfg({1, 3}, 30, {2, 1}, 10));
    REQUIRE(windows.size() == 240);
    CHECK(windows.front().target_frame == 61);
    for (const auto& w : windows) CHECK(w.slots.size() == 6);
  }

  SECTION("w=1: window length 3") {
    const auto windows = enumerate_windows(video, cfg({1, 3}, 30, {1, 1}, 10));
    for (const auto& w : windows) CHECK(w.slots.size() == 3);
  }

  SECTION("50-frame video yields nothing") {
    const auto small = testutil::make_video("v", 50);
    CHECK(enumerate_windows(small, SamplerConfig{}).empty());
  }
}

TEST_CASE("enumerate_single_pairs", "[sampler]") {
  SECTION("full join") {
    const auto video = testutil::make_video("v", 300);
    CHECK(enumerate_single_pairs(video).size() == 300);
  }
  SECTION("invalid label excluded") {
    const auto video = testutil::make_video("v", 300, {}, {5});
    CHECK(enumerate_single_pairs(video).size() == 299);
  }
  SECTION("set intersection of frames and valid labels") {
    LabeledVideo video;
    video.video_id = "v";
    video.frame_rate = 30;
    for (const std::int64_t t : {1, 3}) video.frames.emplace(t, FrameRef{"v", t, ""});
    for (const std::int64_t t : {1, 2, 3}) {
      LabelEntry e;
      e.value = {0.1, 0.2};
      e.valid = true;
      video.labels.emplace(t, e);
    }
    const auto pairs = enumerate_single_pairs(video);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].frame.frame_index == 1);
    CHECK(pairs[1].frame.frame_index == 3);
  }
}

TEST_CASE("sampler properties on randomized sparse videos", "[sampler]") {
  Rng rng(2024);
  const SamplerConfig defaults;
  const std::int64_t lead = defaults.lead_frames();

  for (int iter = 0; iter < 40; ++iter) {
    const std::int64_t frames = 100 + static_cast<std::int64_t>(rng.index(401));
    const double drop = rng.uniform(0.0, 0.3);
    const auto video = testutil::make_sparse_video("v" + std::to_string(iter), frames, drop, rng);

    const auto windows = enumerate_windows(video, defaults);
    const auto reference = testutil::reference_windows(video, defaults);

    REQUIRE(windows.size() == reference.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      CHECK(windows[i].target_frame == reference[i].first);
      std::vector<std::int64_t> got;
      for (const auto& slot : windows[i].slots) got.push_back(slot.frame_index);
      CHECK(got == reference[i].second);

      // causality: no slot newer than T - f*d
      CHECK(got.back() <= windows[i].target_frame - lead);
      // constant length and strict monotonicity (survives fallback)
      CHECK(got.size() == static_cast<std::size_t>(defaults.window_length()));
      for (std::size_t k = 1; k < got.size(); ++k) CHECK(got[k - 1] < got[k]);
    }

    // determinism: a second enumeration is identical
    const auto again = enumerate_windows(video, defaults);
    REQUIRE(again.size() == windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      CHECK(again[i].target_frame == windows[i].target_frame);
      for (std::size_t k = 0; k < windows[i].slots.size(); ++k)
        CHECK(again[i].slots[k].frame_index == windows[i].slots[k].frame_index);
    }
  }
}
