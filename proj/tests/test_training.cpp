#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "capnet/training.hpp"
#include "test_util.hpp"

using namespace capnet;

namespace {

// w=1 keeps unit-test windows short: offsets [-30, -20, -10].
SamplerConfig small_sampler() {
  SamplerConfig c;
  c.w = Rational(1, 1);
  return c;
}

FeatureCache random_cache(const std::vector<LabeledVideo>& videos, std::size_t dim,
                          std::uint64_t seed) {
  FeatureCache cache(dim);
  Rng rng(seed);
  for (const auto& video : videos)
    for (const auto& [index, ref] : video.frames) {
      Tensor f({dim});
      for (std::size_t i = 0; i < dim; ++i) f[i] = rng.uniform(-1.0, 1.0);
      cache.put(video.video_id, index, f);
    }
  return cache;
}

}  // namespace

TEST_CASE("early stopping semantics", "[training]") {
  SECTION("flat metric stops after patience epochs beyond the first") {
    EarlyStopper stopper(4);
    const double metrics[] = {0.5, 0.5, 0.5, 0.5, 0.5};
    int stopped_after = 0;
    for (int epoch = 1; epoch <= 5; ++epoch) {
      stopper.observe(epoch, metrics[epoch - 1]);
      if (stopper.should_stop()) {
        stopped_after = epoch;
        break;
      }
    }
    CHECK(stopped_after == 5);
    CHECK(stopper.best_epoch() == 1);
  }

  SECTION("best checkpoint is the argmax epoch") {
    EarlyStopper stopper(4);
    const double metrics[] = {0.3, 0.6, 0.4, 0.4, 0.4, 0.4};
    int stopped_after = 0;
    for (int epoch = 1; epoch <= 6; ++epoch) {
      stopper.observe(epoch, metrics[epoch - 1]);
      if (stopper.should_stop()) {
        stopped_after = epoch;
        break;
      }
    }
    CHECK(stopped_after == 6);
    CHECK(stopper.best_epoch() == 2);
    CHECK(stopper.best() == 0.6);
  }

  SECTION("strict improvement required") {
    EarlyStopper stopper(2);
    CHECK(stopper.observe(1, 0.5));
    CHECK_FALSE(stopper.observe(2, 0.5));  // equal is not an improvement
    CHECK_FALSE(stopper.observe(3, 0.49));
    CHECK(stopper.should_stop());
  }

  CHECK_THROWS_AS(EarlyStopper(0), ConfigError);
}

TEST_CASE("train config validation", "[training]") {
  TrainConfig tc;
  tc.batch_size = 1;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.patience = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.lr = 0.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("epoch log csv format", "[training]") {
  std::vector<EpochRecord> log(2);
  log[0].epoch = 1;
  log[0].train_loss = 0.9;
  log[1].epoch = 2;
  log[1].train_loss = 0.8;
  std::ostringstream os;
  write_epoch_log_csv(log, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "epoch,train_loss,val_valence,val_arousal,val_mean,seconds");
  std::getline(is, line);
  CHECK(line.rfind("1,0.900000,", 0) == 0);
  CHECK(std::count(line.begin(), line.end(), ',') == 5);
}

TEST_CASE("train_capnet epoch-1 determinism", "[training]") {
  const SamplerConfig sampler = small_sampler();
  std::vector<LabeledVideo> videos;
  for (int v = 0; v < 3; ++v)
    videos.push_back(testutil::make_video("v" + std::to_string(v), 70));
  std::vector<SampleWindow> train_windows, val_windows;
  for (const auto& v : videos)
    for (auto& w : enumerate_windows(v, sampler))
      (train_windows.size() < 80 ? train_windows : val_windows).push_back(std::move(w));
  REQUIRE(train_windows.size() == 80);
  REQUIRE_FALSE(val_windows.empty());

  PrecomputedExtractor extractor(random_cache(videos, 6, 77));
  TrainConfig tc;
  tc.batch_size = 16;
  tc.lr = 1e-3;
  tc.max_epochs = 1;
  tc.patience = 4;
  tc.seed = 123;

  const auto run = [&] {
    CausalityExtractorParams params(6, 5, 4, 0.2);
    Rng init_rng = Rng(tc.seed).fork(1);
    params.init(init_rng);
    return train_capnet(params, extractor, train_windows, val_windows, tc, sampler);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  REQUIRE(a.log.size() == 1);
  CHECK(a.log[0].train_loss == b.log[0].train_loss);
  CHECK(std::abs(a.log[0].train_loss - b.log[0].train_loss) <= 1e-12);
  CHECK(a.log[0].val.mean_ccc == b.log[0].val.mean_ccc);
}

TEST_CASE("train_capnet freeze keeps the extractor bit-identical", "[training]") {
  testutil::TempDir tmp("freeze");
  const SamplerConfig sampler = small_sampler();
  Rng file_rng(5);
  std::vector<LabeledVideo> videos;
  for (int v = 0; v < 2; ++v) {
    auto video = testutil::make_video("v" + std::to_string(v), 64);
    testutil::write_video_files(video, tmp.path(), 8, file_rng);
    videos.push_back(std::move(video));
  }
  std::vector<SampleWindow> windows;
  for (const auto& v : videos)
    for (auto& w : enumerate_windows(v, sampler)) windows.push_back(std::move(w));
  REQUIRE(windows.size() == 68);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.lr = 1e-3;
  tc.max_epochs = 1;
  tc.seed = 9;

  const auto snapshot = [](const TinyCnnExtractor& cnn) {
    TensorMap map;
    cnn.save_to(map, "fer");
    return map;
  };

  SECTION("frozen: no update reaches the extractor") {
    TinyCnnExtractor cnn(8, 4);
    Rng rng(3);
    cnn.init(rng);
    const TensorMap before = snapshot(cnn);
    CausalityExtractorParams params(4, 4, 4, 0.2);
    params.init(rng);
    tc.freeze_extractor = true;
    train_capnet(params, cnn, windows, windows, tc, sampler);
    CHECK(snapshot(cnn) == before);
  }

  SECTION("unfrozen: the extractor trains") {
    TinyCnnExtractor cnn(8, 4);
    Rng rng(3);
    cnn.init(rng);
    const TensorMap before = snapshot(cnn);
    CausalityExtractorParams params(4, 4, 4, 0.2);
    params.init(rng);
    tc.freeze_extractor = false;
    train_capnet(params, cnn, windows, windows, tc, sampler);
    CHECK_FALSE(snapshot(cnn) == before);
  }

  SECTION("unfreezing without a trainable extractor is a config error") {
    PrecomputedExtractor extractor(random_cache(videos, 4, 8));
    CausalityExtractorParams params(4, 4, 4, 0.2);
    tc.freeze_extractor = false;
    CHECK_THROWS_AS(train_capnet(params, extractor, windows, windows, tc, sampler),
                    ConfigError);
  }
}

TEST_CASE("train_capnet validation errors", "[training]") {
  const SamplerConfig sampler = small_sampler();
  const auto video = testutil::make_video("v", 70);
  auto windows = enumerate_windows(video, sampler);
  PrecomputedExtractor extractor(random_cache({video}, 6, 1));
  CausalityExtractorParams params(6, 4, 4, 0.2);
  TrainConfig tc;
  tc.batch_size = 8;

  SECTION("empty stream") {
    CHECK_THROWS_AS(train_capnet(params, extractor, {}, windows, tc, sampler), Error);
  }
  SECTION("batch larger than the dataset") {
    tc.batch_size = 1000;
    CHECK_THROWS_AS(train_capnet(params, extractor, windows, windows, tc, sampler),
                    ConfigError);
  }
  SECTION("window length mismatch vs config") {
    auto bad = windows;
    bad.front().slots.pop_back();
    CHECK_THROWS_AS(train_capnet(params, extractor, bad, windows, tc, sampler), ConfigError);
  }
  SECTION("extractor dimension mismatch") {
    CausalityExtractorParams wrong(5, 4, 4, 0.2);
    CHECK_THROWS_AS(train_capnet(wrong, extractor, windows, windows, tc, sampler),
                    ConfigError);
  }
}

TEST_CASE("train_fer learns a deterministic gray-level map", "[training][slow]") {
  // Synthetic identity task: the label is a fixed function of the frame's
  // gray level, so a single-image model can learn it.
  testutil::TempDir tmp("feridentity");
  Rng rng(17);
  const int frames = 150;
  for (int v = 0; v < 3; ++v) {
    const std::string id = "v" + std::to_string(v);
    std::filesystem::create_directories(tmp.path() / id);
    std::vector<std::array<double, 2>> rows;
    PpmImage img;
    img.width = img.height = 16;
    img.rgb.resize(16 * 16 * 3);
    for (int t = 1; t <= frames; ++t) {
      const double u = rng.uniform(-1.0, 1.0);
      std::fill(img.rgb.begin(), img.rgb.end(),
                static_cast<std::uint8_t>(std::lround((u + 1.0) / 2.0 * 255.0)));
      write_ppm_file(img, (tmp.path() / id / frame_file_name(t)).string());
      rows.push_back({0.8 * u, -0.6 * u});
    }
    std::ofstream ann(tmp.path() / (id + ".csv"));
    ann << serialize_annotation_rows(rows);
  }

  auto scan = scan_video_dir(tmp.str());
  std::vector<SinglePair> train_pairs, val_pairs;
  for (const auto& v : scan.videos)
    for (auto& p : enumerate_single_pairs(v))
      (v.video_id == "v2" ? val_pairs : train_pairs).push_back(std::move(p));
  REQUIRE(train_pairs.size() == 300);
  REQUIRE(val_pairs.size() == 150);

  ModelConfig mc;
  mc.image_size = 16;
  mc.feature_dim = 8;
  FerModel model(mc);
  Rng init_rng = Rng(42).fork(0xFE12);
  model.init(init_rng);

  TrainConfig tc;
  tc.batch_size = 32;
  tc.lr = 3e-3;
  tc.max_epochs = 50;
  tc.patience = 50;
  tc.seed = 42;

  const TrainResult result = train_fer(model, train_pairs, val_pairs, tc);
  CHECK(result.best_metric > 0.95);
  REQUIRE_FALSE(result.log.empty());

  // the returned model is the best checkpoint
  const CCCReport check =
      evaluate_pairs(make_fer_predictor(model), val_pairs, tc.batch_size);
  CHECK(check.mean_ccc == Catch::Approx(result.best_metric).margin(1e-9));
}

TEST_CASE("precompute_features is thread-count invariant", "[training]") {
  testutil::TempDir tmp("precomp");
  Rng rng(23);
  std::vector<LabeledVideo> videos;
  for (int v = 0; v < 2; ++v) {
    auto video = testutil::make_video("v" + std::to_string(v), 40);
    testutil::write_video_files(video, tmp.path(), 8, rng);
    videos.push_back(std::move(video));
  }
  TinyCnnExtractor cnn(8, 4);
  Rng init(1);
  cnn.init(init);
  const FeatureCache one = precompute_features(cnn, videos, 1);
  const FeatureCache two = precompute_features(cnn, videos, 3);
  REQUIRE(one.size() == two.size());
  for (const auto& video : videos)
    for (const auto& [index, ref] : video.frames)
      CHECK(one.get(video.video_id, index) == two.get(video.video_id, index));
}
