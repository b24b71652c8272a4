#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include "capnet/gradcheck_suite.hpp"
#include "capnet/streaming.hpp"
#include "test_util.hpp"

using namespace capnet;

namespace {

// Cheap deterministic encoder: features are a fixed function of the image.
ImageEncoder toy_encoder(std::size_t dim) {
  return [dim](const Tensor& image) {
    Tensor f({dim});
    double mean = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i) mean += image[i];
    mean /= static_cast<double>(image.size());
    for (std::size_t i = 0; i < dim; ++i)
      f[i] = std::sin(mean * static_cast<double>(i + 1));
    return f;
  };
}

Tensor indexed_image(std::int64_t index) {
  Tensor img({3, 4, 4});
  img.fill(static_cast<double>(index % 97) / 96.0);
  return img;
}

CausalityExtractorParams random_params(std::size_t dim, std::uint64_t seed) {
  CausalityExtractorParams p(dim, 6, 5, 0.2);
  Rng rng(seed);
  p.init(rng);
  return p;
}

}  // namespace

TEST_CASE("stream buffer semantics", "[streaming]") {
  StreamEngine engine(SamplerConfig{}, random_params(4, 1), toy_encoder(4));
  CHECK(engine.capacity() == 100);  // f*w + s

  SECTION("ring keeps the newest capacity frames") {
    for (std::int64_t t = 1; t <= 150; ++t) engine.push_frame(t, indexed_image(t));
    CHECK(engine.buffered() == 100);
    CHECK(engine.newest_index() == 150);
  }
  SECTION("gaps are allowed") {
    engine.push_frame(1, indexed_image(1));
    engine.push_frame(2, indexed_image(2));
    engine.push_frame(4, indexed_image(4));
    CHECK(engine.buffered() == 3);
  }
  SECTION("non-monotone pushes are rejected") {
    engine.push_frame(5, indexed_image(5));
    CHECK_THROWS_AS(engine.push_frame(5, indexed_image(5)), StreamError);
    CHECK_THROWS_AS(engine.push_frame(4, indexed_image(4)), StreamError);
    CHECK_THROWS_AS(engine.push_frame(0, indexed_image(0)), StreamError);
    CHECK(engine.buffered() == 1);
  }
}

TEST_CASE("predict_at window construction", "[streaming]") {
  const SamplerConfig defaults;

  SECTION("full buffer through 95: prediction at 100") {
    StreamEngine engine(defaults, random_params(4, 2), toy_encoder(4));
    for (std::int64_t t = 1; t <= 95; ++t) engine.push_frame(t, indexed_image(t));
    const StreamPrediction p = engine.predict_at(100);
    REQUIRE(p.state.has_value());
    CHECK(p.frames_used ==
          std::vector<std::int64_t>{10, 20, 30, 40, 50, 60, 70, 80, 90});
  }
  SECTION("buffer through 89: newest slot falls back to 89") {
    StreamEngine engine(defaults, random_params(4, 2), toy_encoder(4));
    for (std::int64_t t = 1; t <= 89; ++t) engine.push_frame(t, indexed_image(t));
    const StreamPrediction p = engine.predict_at(100);
    REQUIRE(p.state.has_value());
    CHECK(p.frames_used.back() == 89);
  }
  SECTION("buffer through 80: insufficient") {
    StreamEngine engine(defaults, random_params(4, 2), toy_encoder(4));
    for (std::int64_t t = 1; t <= 80; ++t) engine.push_frame(t, indexed_image(t));
    CHECK_FALSE(engine.predict_at(100).state.has_value());
  }
  SECTION("frames_used respects the causal bound") {
    StreamEngine engine(defaults, random_params(4, 2), toy_encoder(4));
    for (std::int64_t t = 1; t <= 300; ++t) {
      engine.push_frame(t, indexed_image(t));
      const StreamPrediction p = engine.predict_at(t);
      for (const std::int64_t used : p.frames_used)
        CHECK(used <= t - defaults.lead_frames());
    }
  }
}

TEST_CASE("poisoned future leaves predictions unchanged", "[streaming]") {
  const SamplerConfig defaults;
  StreamEngine engine(defaults, random_params(4, 3), toy_encoder(4));
  const std::int64_t target = 120;
  for (std::int64_t t = 1; t <= target - 10; ++t) engine.push_frame(t, indexed_image(t));

  const StreamPrediction before = engine.predict_at(target);
  REQUIRE(before.state.has_value());

  // frames in (T - f*d, T] must be invisible to predict_at(T)
  for (const std::int64_t t : {target - 9, target - 5, target - 1, target})
    engine.push_frame(t, indexed_image(t + 31));  // deliberately different content
  const StreamPrediction after = engine.predict_at(target);
  REQUIRE(after.state.has_value());
  CHECK(before.state->valence == after.state->valence);
  CHECK(before.state->arousal == after.state->arousal);
  CHECK(before.frames_used == after.frames_used);
}

TEST_CASE("streaming equals the offline pipeline bit-exactly", "[streaming]") {
  testutil::TempDir tmp("streameq");
  Rng rng(44);
  const SamplerConfig defaults;
  TinyCnnExtractor cnn(8, 4);
  Rng cnn_rng(7);
  cnn.init(cnn_rng);
  const CausalityExtractorParams params = random_params(4, 8);

  for (int iter = 0; iter < 10; ++iter) {
    auto video = testutil::make_sparse_video("v" + std::to_string(iter),
                                             120 + static_cast<std::int64_t>(rng.index(120)),
                                             rng.uniform(0.0, 0.3), rng);
    testutil::write_video_files(video, tmp.path(), 8, rng);

    // offline: the sampler + batch-eval forward over extracted features
    const auto windows = enumerate_windows(video, defaults);
    std::map<std::int64_t, AffectState> offline;
    for (const auto& w : windows) offline[w.target_frame] = capnet_forward(w, cnn, params);

    // streaming: replay frames in order, predict at every existing frame
    StreamEngine engine(defaults, params,
                        [&cnn](const Tensor& image) { return cnn.extract(image); });
    std::map<std::int64_t, AffectState> streamed;
    for (const auto& [index, ref] : video.frames) {
      engine.push_frame(index, load_image_tensor(ref.path, 8, 8));
      const StreamPrediction p = engine.predict_at(index);
      if (p.state) streamed[index] = *p.state;
      CHECK(engine.buffered() <= engine.capacity());
    }

    // every offline target that is also a frame must match bit-exactly, and
    // sufficiency must agree (all labels in these videos are valid)
    for (const auto& [target, state] : offline) {
      if (!video.frames.count(target)) continue;
      REQUIRE(streamed.count(target) == 1);
      CHECK(streamed.at(target).valence == state.valence);
      CHECK(streamed.at(target).arousal == state.arousal);
    }
    for (const auto& [target, state] : streamed) CHECK(offline.count(target) == 1);
  }
}

TEST_CASE("concurrent producer and consumer", "[streaming]") {
  StreamEngine engine(SamplerConfig{}, random_params(4, 5), toy_encoder(4));
  std::atomic<bool> done{false};
  std::atomic<int> predictions{0};

  std::thread producer([&] {
    for (std::int64_t t = 1; t <= 400; ++t) engine.push_frame(t, indexed_image(t));
    done = true;
  });
  std::thread consumer([&] {
    while (!done) {
      const std::int64_t newest = engine.newest_index();
      if (newest > 0) {
        const StreamPrediction p = engine.predict_at(newest);
        if (p.state) {
          ++predictions;
          CHECK(std::abs(p.state->valence) <= 1.0);
        }
      }
    }
  });
  producer.join();
  consumer.join();
  CHECK(engine.buffered() == engine.capacity());
}

TEST_CASE("stream trace csv", "[streaming]") {
  std::vector<StreamTraceRow> rows(2);
  rows[0].frame = 90;
  rows[1].frame = 91;
  rows[1].state = AffectState{0.25, -0.5};
  rows[1].micros = 12.34;
  std::ostringstream os;
  write_stream_trace_csv(rows, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "frame,valence,arousal,insufficient_flag,micros_per_prediction");
  std::getline(is, line);
  CHECK(line.rfind("90,,,1,", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("91,0.250000000,-0.500000000,0,", 0) == 0);
}
