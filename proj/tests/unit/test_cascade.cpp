#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "esr/cascade.hpp"

using namespace esr;

namespace {

// Blob-per-landmark renderer for in-memory training fixtures.
Image render_blobs(const Shape& shape, int size) {
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double v = 30.0;
      for (std::size_t j = 0; j < shape.n_landmarks(); ++j) {
        const double dx = x - shape.x(j), dy = y - shape.y(j);
        v += (50.0 + 30.0 * double(j)) * std::exp(-(dx * dx + dy * dy) / 18.0);
      }
      img.pixels[y * size + x] = std::uint8_t(std::clamp(std::llround(v), 0ll, 255ll));
    }
  return img;
}

Shape pentagon(double cx, double cy, double r, double rot) {
  Shape s(5);
  for (std::size_t j = 0; j < 5; ++j) {
    const double th = rot + 2.0 * 3.14159265358979 * double(j) / 5.0;
    s.set_point(j, {cx + r * std::cos(th), cy + 0.8 * r * std::sin(th)});
  }
  return s;
}

struct Fixture {
  std::vector<Image> images;
  std::vector<Shape> gts;
  std::vector<LabeledImage> labeled;
  InitSet init;
};

Fixture make_fixture(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uc(22.0, 42.0), ur(9.0, 14.0),
      ua(-0.4, 0.4), jit(-0.6, 0.6);
  Fixture fx;
  fx.images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Shape gt = pentagon(uc(rng), uc(rng), ur(rng), ua(rng));
    for (double& v : gt.coords) v += jit(rng);
    fx.images.push_back(render_blobs(gt, 64));
    fx.gts.push_back(std::move(gt));
  }
  for (std::size_t i = 0; i < count; ++i)
    fx.labeled.push_back({&fx.images[i], fx.gts[i]});
  fx.init.exemplars = fx.gts;
  return fx;
}

double shape_dist(const Shape& a, const Shape& b) {
  double ss = 0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    const double d = a.coords[i] - b.coords[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

}  // namespace

TEST_CASE("place_in_box centers the exemplar and preserves aspect", "[cascade]") {
  Shape ex(3);
  ex.set_point(0, {0.0, 0.0});
  ex.set_point(1, {4.0, 0.0});
  ex.set_point(2, {0.0, 2.0});
  const Box box{10.0, 20.0, 8.0, 8.0};
  const Shape placed = place_in_box(ex, box);
  // Limiting dimension is width: scale 2. Shape spans 8 x 4, centered.
  const Box pb = bounding_box(placed);
  CHECK(pb.w == Catch::Approx(8.0));
  CHECK(pb.h == Catch::Approx(4.0));
  CHECK(pb.x + pb.w / 2 == Catch::Approx(box.x + box.w / 2));
  CHECK(pb.y + pb.h / 2 == Catch::Approx(box.y + box.h / 2));
  // Aspect: the 2:1 edge ratio survives.
  const double e01 = shape_dist(Shape(std::vector<double>{placed.x(0), placed.y(0)}),
                                Shape(std::vector<double>{placed.x(1), placed.y(1)}));
  const double e02 = shape_dist(Shape(std::vector<double>{placed.x(0), placed.y(0)}),
                                Shape(std::vector<double>{placed.x(2), placed.y(2)}));
  CHECK(e01 == Catch::Approx(2.0 * e02));
}

TEST_CASE("placing an exemplar into its own bounding box is exact", "[cascade]") {
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  Shape ex(6);
  for (std::size_t i = 0; i < 6; ++i) ex.set_point(i, {u(rng), u(rng)});
  const Shape placed = place_in_box(ex, bounding_box(ex));
  for (std::size_t i = 0; i < ex.coords.size(); ++i)
    CHECK(placed.coords[i] == ex.coords[i]);
}

TEST_CASE("initialization draws without replacement when possible", "[cascade]") {
  Image img(8, 8);
  InitSet set;
  for (int k = 0; k < 5; ++k) {
    Shape s(3);
    s.set_point(0, {0.0, 0.0});
    s.set_point(1, {1.0, double(k + 1)});  // distinct aspect per exemplar
    s.set_point(2, {2.0, 0.0});
    set.exemplars.push_back(s);
  }
  const std::vector<InitItem> items{{&img, std::nullopt, {0, 0, 7, 7}}};
  Rng rng(51);
  const auto samples = initialize(items, 5, set, rng);
  REQUIRE(samples.size() == 5);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b)
      CHECK(shape_dist(samples[a].initial, samples[b].initial) > 1e-9);

  // Small set: falls back to replacement rather than failing.
  InitSet two;
  two.exemplars = {set.exemplars[0], set.exemplars[1]};
  Rng rng2(52);
  const auto more = initialize(items, 6, two, rng2);
  CHECK(more.size() == 6);

  CHECK_THROWS_AS(initialize(items, 0, set, rng), UsageError);
  CHECK_THROWS_AS(initialize(items, 1, InitSet{}, rng), UsageError);
}

TEST_CASE("median combination matches a sort-based oracle", "[cascade]") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (std::size_t count : {1u, 2u, 3u, 4u, 7u}) {
    std::vector<Shape> shapes(count, Shape(4));
    for (auto& s : shapes)
      for (double& v : s.coords) v = u(rng);
    const Shape med = combine_multiple_results(shapes);
    for (std::size_t j = 0; j < 8; ++j) {
      std::vector<double> vals;
      for (const auto& s : shapes) vals.push_back(s.coords[j]);
      std::sort(vals.begin(), vals.end());
      CHECK(med.coords[j] == vals[(vals.size() - 1) / 2]);
    }
  }
  CHECK_THROWS_AS(combine_multiple_results(std::vector<Shape>{}), UsageError);
}

TEST_CASE("stage learning on zero residuals yields a fern-less stage", "[cascade]") {
  const Fixture fx = make_fixture(3, 54);
  const Shape mean = compute_mean_shape(fx.gts);
  std::vector<SampleRef> refs;
  for (std::size_t i = 0; i < 3; ++i) refs.push_back({&fx.images[i], &fx.gts[i]});
  std::vector<std::vector<double>> zeros(3, std::vector<double>(10, 0.0));
  TrainParams tp;
  tp.p_pixels = 20;
  tp.k_ferns = 4;
  tp.f_features = 3;
  Rng rng(55);
  const StageRegressor stage = learn_stage_regressor(zeros, refs, mean, tp, rng);
  CHECK(stage.ferns.empty());
  CHECK(stage.local_coords.size() == 20);
}

TEST_CASE("residual sum of squares never increases across ferns", "[cascade]") {
  const Fixture fx = make_fixture(6, 56);
  const Shape mean = compute_mean_shape(fx.gts);

  // Residuals from deliberately offset shapes.
  std::vector<Shape> current;
  for (const Shape& gt : fx.gts) {
    Shape s = gt;
    for (std::size_t i = 0; i < s.coords.size(); ++i) s.coords[i] += (i % 2) ? 2.5 : -1.5;
    current.push_back(s);
  }
  std::vector<SampleRef> refs;
  std::vector<std::vector<double>> y;
  for (std::size_t i = 0; i < 6; ++i) {
    refs.push_back({&fx.images[i], &current[i]});
    y.push_back(normalize_target(fx.gts[i], current[i], mean).coords);
  }

  TrainParams tp;
  tp.p_pixels = 30;
  tp.k_ferns = 12;
  tp.f_features = 4;
  tp.beta = 5.0;
  Rng rng(57);
  std::vector<double> sse;
  const StageRegressor stage = learn_stage_regressor(y, refs, mean, tp, rng, &sse);
  REQUIRE(stage.ferns.size() == 12);
  REQUIRE(sse.size() == 13);  // initial value plus one per fern
  for (std::size_t k = 1; k < sse.size(); ++k) CHECK(sse[k] <= sse[k - 1] + 1e-9);
  CHECK(sse.back() < sse.front());

  for (const Fern& fern : stage.ferns) {
    CHECK(fern.pairs.size() == 4);
    CHECK(fern.thresholds.size() == 4);
    CHECK(fern.bin_outputs.size() == 16);
  }
}

TEST_CASE("training reduces the mean alignment error", "[cascade]") {
  const Fixture fx = make_fixture(8, 58);
  TrainParams tp;
  tp.n_aug = 3;
  tp.t_stages = 3;
  tp.k_ferns = 20;
  tp.p_pixels = 40;
  tp.f_features = 4;
  tp.seed = 59;
  TrainTrace trace;
  const ESRModel model = train(fx.labeled, tp, fx.init, &trace);
  REQUIRE(model.stages.size() == 3);
  CHECK(model.n_fp == 5);
  REQUIRE(trace.stage_errors.size() == 3);
  CHECK(trace.stage_errors.back() < trace.initial_error);
  for (const auto& stage : model.stages) CHECK(stage.local_coords.size() == 40);
}

TEST_CASE("stored stage shapes replay exactly through cascade_step", "[cascade]") {
  const Fixture fx = make_fixture(5, 60);
  TrainParams tp;
  tp.n_aug = 2;
  tp.t_stages = 2;
  tp.k_ferns = 10;
  tp.p_pixels = 30;
  tp.f_features = 3;
  tp.seed = 61;
  TrainTrace trace;
  trace.keep_shapes = true;
  const ESRModel model = train(fx.labeled, tp, fx.init, &trace);
  REQUIRE(trace.initial_shapes.size() == 10);
  REQUIRE(trace.shapes_after_stage.size() == 2);

  // The shared update path must reproduce the training trajectory bit for
  // bit when replayed from the stored initial shapes.
  for (std::size_t s = 0; s < trace.initial_shapes.size(); ++s) {
    const Image& img = fx.images[s / tp.n_aug];
    Shape cur = trace.initial_shapes[s];
    for (std::size_t t = 0; t < model.stages.size(); ++t) {
      cur = cascade_step(img, cur, model.stages[t], model.mean_shape);
      for (std::size_t j = 0; j < cur.coords.size(); ++j)
        CHECK(cur.coords[j] == trace.shapes_after_stage[t][s].coords[j]);
    }
  }
}

TEST_CASE("perfect initialization trains to a no-op and predicts exactly", "[cascade]") {
  const Fixture fx = make_fixture(1, 62);
  TrainParams tp;
  tp.n_aug = 1;
  tp.t_stages = 2;
  tp.k_ferns = 5;
  tp.p_pixels = 10;
  tp.f_features = 3;
  // The only exemplar is the groundtruth itself: placed into its own
  // bounding box it reproduces the groundtruth, so residuals vanish.
  InitSet self;
  self.exemplars = {fx.gts[0]};
  const ESRModel model = train(fx.labeled, tp, self, nullptr);
  REQUIRE(model.stages.size() == 2);
  for (const auto& st : model.stages) CHECK(st.ferns.empty());

  Rng rng(63);
  const Shape pred = predict(model, fx.images[0], TestParams{1}, self, rng,
                             bounding_box(fx.gts[0]));
  for (std::size_t j = 0; j < pred.coords.size(); ++j)
    CHECK(pred.coords[j] == fx.gts[0].coords[j]);
}

TEST_CASE("prediction is deterministic for a fixed engine seed", "[cascade]") {
  const Fixture fx = make_fixture(4, 64);
  TrainParams tp;
  tp.n_aug = 2;
  tp.t_stages = 2;
  tp.k_ferns = 8;
  tp.p_pixels = 25;
  tp.f_features = 3;
  tp.seed = 65;
  const ESRModel model = train(fx.labeled, tp, fx.init, nullptr);

  Rng r1(7), r2(7);
  const Shape a = predict(model, fx.images[0], TestParams{3}, fx.init, r1, std::nullopt);
  const Shape b = predict(model, fx.images[0], TestParams{3}, fx.init, r2, std::nullopt);
  REQUIRE(a.coords.size() == b.coords.size());
  for (std::size_t j = 0; j < a.coords.size(); ++j) CHECK(a.coords[j] == b.coords[j]);
}

TEST_CASE("zero stages is a valid configuration", "[cascade]") {
  const Fixture fx = make_fixture(2, 66);
  TrainParams tp;
  tp.n_aug = 1;
  tp.t_stages = 0;
  const ESRModel model = train(fx.labeled, tp, fx.init, nullptr);
  CHECK(model.stages.empty());
  Rng rng(67);
  const Shape pred =
      predict(model, fx.images[0], TestParams{1}, fx.init, rng, std::nullopt);
  CHECK(pred.n_landmarks() == 5);  // initial placement, no refinement
}

TEST_CASE("parameter validation rejects nonsense", "[cascade]") {
  TrainParams tp;
  tp.p_pixels = 1;
  CHECK_THROWS_AS(tp.validate(), UsageError);
  tp = TrainParams{};
  tp.f_features = 0;
  CHECK_THROWS_AS(tp.validate(), UsageError);
  tp = TrainParams{};
  tp.f_features = 17;
  CHECK_THROWS_AS(tp.validate(), UsageError);
  tp = TrainParams{};
  tp.kappa = 0.0;
  CHECK_THROWS_AS(tp.validate(), UsageError);
  tp = TrainParams{};
  tp.beta = -1.0;
  CHECK_THROWS_AS(tp.validate(), UsageError);
  CHECK_THROWS_AS(TestParams{0}.validate(), UsageError);

  const Fixture fx = make_fixture(1, 68);
  CHECK_THROWS_AS(train(std::vector<LabeledImage>{}, TrainParams{}, fx.init, nullptr),
                  UsageError);
}
