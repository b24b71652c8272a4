#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "capnet/ccc.hpp"
#include "capnet/feature_cache.hpp"
#include "capnet/gradcheck_suite.hpp"
#include "capnet/models.hpp"
#include "test_util.hpp"

using namespace capnet;

namespace {
Tensor gray_image(int side, double level) {
  Tensor img({3, static_cast<std::size_t>(side), static_cast<std::size_t>(side)});
  img.fill(level);
  return img;
}
}  // namespace

TEST_CASE("model config validation", "[models]") {
  ModelConfig mc;
  CHECK_NOTHROW(mc.validate());
  mc.image_size = 100;  // not divisible by 8
  CHECK_THROWS_AS(mc.validate(), ConfigError);
  mc.image_size = 224;
  mc.dropout = 1.0;
  CHECK_THROWS_AS(mc.validate(), ConfigError);
  mc.dropout = 0.2;
  mc.feature_dim = 0;
  CHECK_THROWS_AS(mc.validate(), ConfigError);
}

TEST_CASE("tiny cnn basics", "[models]") {
  SECTION("zero image with zero-initialized parameters gives zero features") {
    TinyCnnExtractor cnn(16, 8);  // params start zeroed
    const Tensor f = cnn.extract(gray_image(16, 0.0));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == 0.0);
  }
  SECTION("eval determinism") {
    TinyCnnExtractor cnn(16, 8);
    Rng rng(3);
    cnn.init(rng);
    const Tensor img = gray_image(16, 0.37);
    CHECK(cnn.extract(img) == cnn.extract(img));
  }
  SECTION("distinct gray levels give distinct features across inits") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      TinyCnnExtractor cnn(16, 8);
      Rng rng(seed);
      cnn.init(rng);
      const Tensor fa = cnn.extract(gray_image(16, 0.2));
      const Tensor fb = cnn.extract(gray_image(16, 0.8));
      CHECK_FALSE(fa == fb);
    }
  }
  SECTION("wrong image shape is an error") {
    TinyCnnExtractor cnn(16, 8);
    CHECK_THROWS_AS(cnn.extract(Tensor({3, 8, 8})), ShapeError);
    CHECK_THROWS_AS(cnn.extract(Tensor({1, 16, 16})), ShapeError);
    CHECK_THROWS_AS(TinyCnnExtractor(17, 8), ConfigError);
  }
}

TEST_CASE("feature cache", "[models]") {
  testutil::TempDir tmp("cache");
  FeatureCache cache(32);
  Rng rng(4);

  // float-exact values survive the f32 round trip bit-exactly
  std::vector<Tensor> stored;
  for (int v = 0; v < 2; ++v)
    for (std::int64_t t = 1; t <= 100; ++t) {
      Tensor f({32});
      for (std::size_t i = 0; i < 32; ++i)
        f[i] = static_cast<double>(static_cast<float>(rng.uniform(-1.0, 1.0)));
      cache.put("v" + std::to_string(v), t, f);
      stored.push_back(f);
    }

  SECTION("write then read is bit-exact") {
    std::size_t k = 0;
    for (int v = 0; v < 2; ++v)
      for (std::int64_t t = 1; t <= 100; ++t) CHECK(cache.get("v" + std::to_string(v), t) == stored[k++]);
  }

  SECTION("missing entry names the frame") {
    try {
      cache.get("v0", 999);
      FAIL("expected LookupError");
    } catch (const LookupError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("v0") != std::string::npos);
      CHECK(msg.find("999") != std::string::npos);
    }
  }

  SECTION("file size matches the closed form and round trips") {
    const std::string bin = (tmp.path() / "f.capf").string();
    const std::string man = (tmp.path() / "f.capf.manifest").string();
    cache.save(bin, man);
    CHECK(std::filesystem::file_size(bin) == FeatureCache::expected_file_size(32, 200));
    CHECK(std::filesystem::file_size(bin) == 16 + 200 * (4 + 32 * 4));

    const FeatureCache loaded = FeatureCache::load(bin, man);
    CHECK(loaded.dim() == 32);
    CHECK(loaded.size() == 200);
    CHECK(loaded.get("v1", 57) == cache.get("v1", 57));

    // resave is byte-identical
    const std::string bin2 = (tmp.path() / "g.capf").string();
    loaded.save(bin2, bin2 + ".manifest");
    std::ifstream a(bin, std::ios::binary), b(bin2, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}

TEST_CASE("fer model", "[models]") {
  ModelConfig mc;
  mc.image_size = 16;
  mc.feature_dim = 8;

  SECTION("zero model maps to (0,0)") {
    FerModel model(mc);
    const AffectState out = fer_forward(gray_image(16, 0.5), model);
    CHECK(out.valence == 0.0);
    CHECK(out.arousal == 0.0);
  }
  SECTION("outputs bounded in [-1,1]") {
    FerModel model(mc);
    Rng rng(6);
    model.init(rng);
    Rng img_rng(7);
    for (int i = 0; i < 200; ++i) {
      Tensor img({3, 16, 16});
      gradsuite::fill_uniform(img, img_rng, 0.0, 1.0);
      const AffectState out = fer_forward(img, model);
      CHECK(out.in_range());
    }
  }
  SECTION("1-CCC gradient through the head matches finite differences") {
    Rng rng(8);
    const std::size_t n = 8, d = 8;
    FcParams head(d, 2, Activation::Tanh);
    gradsuite::fill_uniform(head.w, rng);
    gradsuite::fill_uniform(head.b, rng);
    Tensor features({n, d});
    gradsuite::fill_uniform(features, rng);
    Tensor labels({n, 2});
    gradsuite::fill_uniform(labels, rng);

    FcContext ctx;
    const Tensor preds = fc_forward(features, head, &ctx);
    const CccLossResult loss = ccc_loss_and_grad(preds, labels);
    FcParams grads(d, 2, head.act);
    const Tensor dfeat = fc_backward(loss.grad, head, ctx, grads);

    const auto eval = [&] {
      return ccc_loss_and_grad(fc_forward(features, head), labels).loss;
    };
    const auto r = grad_check(eval,
                              {{"w", &head.w, &grads.w},
                               {"b", &head.b, &grads.b},
                               {"x", &features, &dfeat}},
                              1e-5);
    CHECK(r.max_rel_err < 1e-6);
  }
}

TEST_CASE("capnet forward", "[models]") {
  SECTION("zero features and zero parameters give (0,0)") {
    CausalityExtractorParams p(8, 4, 4, 0.2);
    std::vector<Tensor> feats(3, Tensor({1, 8}));
    const Tensor out = capnet_forward_batch(feats, p, Mode::Eval);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
  }
  SECTION("eval output is bit-deterministic") {
    Rng rng(12);
    CausalityExtractorParams p(8, 6, 5, 0.2);
    p.init(rng);
    std::vector<Tensor> feats(9, Tensor({2, 8}));
    for (Tensor& f : feats) gradsuite::fill_uniform(f, rng);
    CHECK(capnet_forward_batch(feats, p, Mode::Eval) ==
          capnet_forward_batch(feats, p, Mode::Eval));
  }
  SECTION("window order changes the output") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      CausalityExtractorParams p(4, 6, 5, 0.2);
      p.init(rng);
      std::vector<Tensor> feats(5, Tensor({1, 4}));
      for (Tensor& f : feats) gradsuite::fill_uniform(f, rng);
      std::vector<Tensor> reversed(feats.rbegin(), feats.rend());
      CHECK_FALSE(capnet_forward_batch(feats, p, Mode::Eval) ==
                  capnet_forward_batch(reversed, p, Mode::Eval));
    }
  }
  SECTION("outputs bounded in [-1,1]") {
    Rng rng(13);
    CausalityExtractorParams p(4, 6, 5, 0.2);
    p.init(rng);
    for (int i = 0; i < 500; ++i) {
      std::vector<Tensor> feats(3, Tensor({1, 4}));
      for (Tensor& f : feats) gradsuite::fill_uniform(f, rng, -3.0, 3.0);
      const Tensor out = capnet_forward_batch(feats, p, Mode::Eval);
      CHECK(std::abs(out[0]) <= 1.0);
      CHECK(std::abs(out[1]) <= 1.0);
    }
  }
  SECTION("window length validation") {
    Rng rng(14);
    CausalityExtractorParams p(4, 6, 5, 0.2);
    p.init(rng);
    SampleWindow w;
    w.slots.resize(5);
    FeatureCache cache(4);
    PrecomputedExtractor extractor(std::move(cache));
    CHECK_THROWS_AS(capnet_forward(w, extractor, p, 9), ShapeError);
  }
}

TEST_CASE("checkpoint modularity across extractor kinds", "[models]") {
  // Train-side: causality extractor paired with a TinyCnn, saved together.
  Rng rng(21);
  CausalityExtractorParams trained(8, 6, 5, 0.2);
  trained.init(rng);
  TinyCnnExtractor cnn(16, 8);
  cnn.init(rng);
  TensorMap map;
  trained.save_to(map);
  cnn.save_to(map, "fer");
  save_capnet_config(map, {8, 6, 5, SamplerConfig{}});

  // Load-side: same checkpoint, precomputed-feature extractor of matching D.
  CausalityExtractorParams loaded(8, 6, 5, 0.2);
  loaded.load_from(map);
  bool all_equal = true;
  loaded.for_each_tensor([&](const char* name, const Tensor& t) {
    const Tensor& orig = map.at(name);
    if (!(t == orig)) all_equal = false;
  });
  CHECK(all_equal);

  FeatureCache cache(8);
  Tensor f({8});
  gradsuite::fill_uniform(f, rng);
  cache.put("v", 1, f);
  cache.put("v", 2, f);
  PrecomputedExtractor precomputed(std::move(cache));

  SampleWindow w;
  w.video_id = "v";
  w.target_frame = 7;
  w.slots = {FrameRef{"v", 1, ""}, FrameRef{"v", 2, ""}};
  const AffectState out = capnet_forward(w, precomputed, loaded);
  CHECK(std::abs(out.valence) <= 1.0);

  const CapnetCheckpointInfo info = load_capnet_config(map);
  CHECK(info.feature_dim == 8);
  CHECK(info.lstm_hidden == 6);
  CHECK(info.fc_hidden == 5);
  CHECK(info.sampler.w == Rational(3, 1));
  CHECK(info.sampler.d == Rational(1, 3));

  SECTION("dimension mismatch names the dims") {
    TinyCnnExtractor wrong(16, 16);
    try {
      wrong.load_from(map, "fer");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("D=8") != std::string::npos);
      CHECK(msg.find("D=16") != std::string::npos);
    }
  }
}

TEST_CASE("end-to-end cnn gradient check (models invariant)", "[models]") {
  const GradSuiteResult r = run_grad_suite("cnn", 3, false);
  INFO("worst " << r.worst);
  CHECK(r.pass());
}
