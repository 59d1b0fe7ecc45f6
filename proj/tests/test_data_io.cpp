#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "hstc/errors.hpp"
#include "hstc/hypercube.hpp"
#include "hstc/linear_model.hpp"
#include "hstc/model_io.hpp"
#include "hstc/rank1_fnn.hpp"
#include "hstc/rng.hpp"
#include "support/synthetic.hpp"

using namespace hstc;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("hstc_test_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

HyperCube random_cube(Rng& rng, Index h, Index w, Index b) {
  HyperCube cube;
  cube.height = h;
  cube.width = w;
  cube.bands = b;
  cube.values = DenseTensor(Shape{h, w, b});
  for (Index j = 0; j < cube.values.size(); ++j) {
    // keep values exactly representable in f32
    cube.values.data()[j] =
        static_cast<double>(static_cast<float>(rng.uniform(-10.0, 10.0)));
  }
  return cube;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("cube round trip is bit exact") {
  const fs::path dir = temp_dir();
  HyperCube zeros;
  zeros.height = 2;
  zeros.width = 2;
  zeros.bands = 1;
  zeros.values = DenseTensor(Shape{2, 2, 1});
  save_cube(dir / "zeros", zeros);
  const HyperCube back = load_cube(dir / "zeros");
  CHECK(back.height == 2);
  CHECK(back.values.data().cwiseAbs().maxCoeff() == 0.0);

  Rng rng(1);
  const HyperCube cube = random_cube(rng, 5, 7, 3);
  save_cube(dir / "cube", cube);
  const HyperCube cube2 = load_cube(dir / "cube.json");  // sidecar path form
  CHECK((cube2.values.data() - cube.values.data()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hand-written BSQ payload decodes to known positions") {
  const fs::path dir = temp_dir();
  std::ofstream header(dir / "tiny.json");
  header << R"({"magic":"HSTC1","height":1,"width":2,"bands":2,)"
         << R"("dtype":"f32","order":"bsq","endianness":"little"})";
  header.close();
  // two 1x2 planes, row-major: band 0 = (1,2), band 1 = (3,4)
  std::vector<unsigned char> payload;
  for (const float v : {1.0f, 2.0f, 3.0f, 4.0f}) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    payload.push_back(static_cast<unsigned char>(u));
    payload.push_back(static_cast<unsigned char>(u >> 8));
    payload.push_back(static_cast<unsigned char>(u >> 16));
    payload.push_back(static_cast<unsigned char>(u >> 24));
  }
  write_bytes(dir / "tiny.raw", payload);

  const HyperCube cube = load_cube(dir / "tiny");
  CHECK(cube.at(0, 0, 0) == 1.0);
  CHECK(cube.at(0, 1, 0) == 2.0);
  CHECK(cube.at(0, 0, 1) == 3.0);
  CHECK(cube.at(0, 1, 1) == 4.0);
}

TEST_CASE("cube format violations raise FormatError") {
  const fs::path dir = temp_dir();
  Rng rng(2);
  const HyperCube cube = random_cube(rng, 2, 3, 2);
  save_cube(dir / "c", cube);

  SUBCASE("truncated payload") {
    fs::resize_file(dir / "c.raw", 10);
    CHECK_THROWS_WITH_AS(load_cube(dir / "c"), doctest::Contains("expected"),
                         FormatError);
  }
  SUBCASE("bad magic") {
    std::ofstream h(dir / "c.json");
    h << R"({"magic":"NOPE","height":2,"width":3,"bands":2,)"
      << R"("dtype":"f32","order":"bsq","endianness":"little"})";
    h.close();
    CHECK_THROWS_WITH_AS(load_cube(dir / "c"), doctest::Contains("magic"),
                         FormatError);
  }
  SUBCASE("missing header") {
    CHECK_THROWS_AS(load_cube(dir / "missing"), FormatError);
  }
}

TEST_CASE("label map round trips and validates its size") {
  const fs::path dir = temp_dir();
  LabelMap labels;
  labels.height = 3;
  labels.width = 2;
  labels.ids = {0, 1, 2, 0, 1, 2};
  save_labels(dir / "x.labels.raw", labels);
  const LabelMap back = load_labels(dir / "x.labels.raw", 3, 2);
  CHECK(back.ids == labels.ids);
  CHECK(back.max_class() == 2);
  CHECK_THROWS_AS(load_labels(dir / "x.labels.raw", 4, 2), FormatError);
}

TEST_CASE("patch extraction centers, pads and validates the window") {
  Rng rng(3);
  const HyperCube cube = random_cube(rng, 6, 5, 4);

  SUBCASE("window 1 is the pixel spectrum") {
    const DenseTensor p = extract_patch(cube, 2, 3, 1);
    REQUIRE(p.shape() == Shape{1, 1, 4});
    for (Index b = 0; b < 4; ++b) {
      CHECK(p(0, 0, b) == cube.at(2, 3, b));
    }
  }
  SUBCASE("the center of any window is the pixel itself") {
    for (int rep = 0; rep < 10; ++rep) {
      const Index r = static_cast<Index>(rng.below(6));
      const Index c = static_cast<Index>(rng.below(5));
      const DenseTensor p = extract_patch(cube, r, c, 3);
      for (Index b = 0; b < 4; ++b) {
        CHECK(p(1, 1, b) == cube.at(r, c, b));
      }
    }
  }
  SUBCASE("corner windows zero-fill exactly the outside positions") {
    const DenseTensor p = extract_patch(cube, 0, 0, 3);
    for (Index b = 0; b < 4; ++b) {
      Index zeros = 0;
      for (Index i = 0; i < 3; ++i) {
        for (Index j = 0; j < 3; ++j) {
          if (i == 0 || j == 0) {
            CHECK(p(i, j, b) == 0.0);
            ++zeros;
          } else {
            CHECK(p(i, j, b) == cube.at(i - 1, j - 1, b));
          }
        }
      }
      CHECK(zeros == 5);
    }
  }
  SUBCASE("interior patches contain no padding") {
    const DenseTensor p = extract_patch(cube, 2, 2, 5);
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 5; ++j) {
        for (Index b = 0; b < 4; ++b) {
          CHECK(p(i, j, b) == cube.at(i, j, b));
        }
      }
    }
  }
  SUBCASE("even windows are rejected") {
    CHECK_THROWS_AS(extract_patch(cube, 2, 2, 4), std::invalid_argument);
    CHECK_THROWS_AS(extract_patch(cube, 9, 2, 3), std::out_of_range);
  }
}

TEST_CASE("per-class split applies the 50% fallback and stays deterministic") {
  LabelMap labels;
  labels.height = 30;
  labels.width = 20;
  labels.ids.assign(600, 0);
  // class 1: 30 pixels, class 2: 500 pixels, class 3: none (warn + skip)
  for (int i = 0; i < 30; ++i) labels.ids[static_cast<std::size_t>(i)] = 1;
  for (int i = 30; i < 530; ++i) labels.ids[static_cast<std::size_t>(i)] = 2;
  labels.ids[599] = 4;  // class 4: single pixel

  const SplitIndices split = split_per_class_indices(labels, 50, 42);
  Index c1_train = 0, c2_train = 0, c4_train = 0;
  for (const auto& [r, c] : split.train_coords) {
    const std::uint16_t id = labels.at(r, c);
    if (id == 1) ++c1_train;
    if (id == 2) ++c2_train;
    if (id == 4) ++c4_train;
  }
  CHECK(c1_train == 15);  // 30 < 50 -> floor(30/2)
  CHECK(c2_train == 50);
  CHECK(c4_train == 0);  // floor(1/2)

  // disjoint and jointly covering all labeled pixels
  std::set<std::pair<Index, Index>> seen;
  for (const auto& p : split.train_coords) seen.insert(p);
  for (const auto& p : split.test_coords) {
    CHECK_FALSE(seen.contains(p));
    seen.insert(p);
  }
  CHECK(seen.size() == 531);

  const SplitIndices again = split_per_class_indices(labels, 50, 42);
  CHECK(again.train_coords == split.train_coords);
  CHECK(again.test_coords == split.test_coords);

  const SplitIndices other = split_per_class_indices(labels, 50, 43);
  CHECK(other.train_coords != split.train_coords);
}

TEST_CASE("split_per_class materializes labeled patch datasets") {
  const auto planted = hstc::testing::planted_band_cube(7, 12, 12, 5, 3, {1, 3});
  const auto [train, test] = split_per_class(planted.cube, planted.labels, 10, 7, 3);
  train.validate();
  test.validate();
  CHECK(train.patch_shape() == Shape{3, 3, 5});
  CHECK(train.split == "train");
  CHECK(test.split == "test");
  Index labeled = 0;
  for (const std::uint16_t id : planted.labels.ids) {
    if (id > 0) ++labeled;
  }
  CHECK(train.size() + test.size() == labeled);
}

TEST_CASE("tensor model files round trip exactly") {
  const fs::path dir = temp_dir();
  Rng rng(4);
  TensorLRModel m;
  m.num_classes = 3;
  m.input_shape = {2, 3, 4};
  for (const Index p : m.input_shape) {
    m.weights.factors.push_back(uniform_matrix(rng, p, 3, 0.8));
  }
  FeatureScaling scaling;
  scaling.mean = uniform_matrix(rng, 24, 1, 1.0);
  scaling.stddev = uniform_matrix(rng, 24, 1, 0.3).cwiseAbs().array() + 0.5;
  m.scaling = scaling;

  save_model(dir / "m.json", m, SplitSpec{99, 20});
  const ModelFile loaded = load_model(dir / "m.json");
  REQUIRE(std::holds_alternative<TensorLRModel>(loaded.model));
  const auto& back = std::get<TensorLRModel>(loaded.model);
  REQUIRE(loaded.split.has_value());
  CHECK(loaded.split->seed == 99);
  CHECK(loaded.split->samples_per_class == 20);

  for (std::size_t l = 0; l < 3; ++l) {
    CHECK((back.weights.factors[l] - m.weights.factors[l])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  for (int rep = 0; rep < 10; ++rep) {
    DenseTensor x(m.input_shape);
    for (Index j = 0; j < x.size(); ++j) {
      x.data()[j] = rng.uniform(-2.0, 2.0);
    }
    const Eigen::VectorXd pa = predict_proba(m, x);
    const Eigen::VectorXd pb = predict_proba(back, x);
    CHECK((pa - pb).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fnn model files round trip exactly") {
  const fs::path dir = temp_dir();
  Rng rng(5);
  Rank1FNNModel m;
  m.num_hidden = 4;
  m.num_classes = 3;
  m.input_shape = {2, 3};
  m.hidden.factors = {uniform_matrix(rng, 2, 4, 0.7),
                      uniform_matrix(rng, 3, 4, 0.7)};
  m.output = uniform_matrix(rng, 4, 3, 0.7);

  save_model(dir / "f.json", m);
  const ModelFile loaded = load_model(dir / "f.json");
  REQUIRE(std::holds_alternative<Rank1FNNModel>(loaded.model));
  const auto& back = std::get<Rank1FNNModel>(loaded.model);
  CHECK_FALSE(loaded.split.has_value());
  for (int rep = 0; rep < 10; ++rep) {
    DenseTensor x(m.input_shape);
    for (Index j = 0; j < x.size(); ++j) {
      x.data()[j] = rng.uniform(-2.0, 2.0);
    }
    CHECK((forward(m, x) - forward(back, x)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("model file validation names the offending field") {
  const fs::path dir = temp_dir();
  Rng rng(6);
  TensorLRModel m;
  m.num_classes = 2;
  m.input_shape = {2, 2};
  m.weights.factors = {uniform_matrix(rng, 2, 2, 1.0),
                       uniform_matrix(rng, 2, 2, 1.0)};
  save_model(dir / "v.json", m);

  const auto rewrite = [&](const std::string& from, const std::string& to) {
    std::ifstream in(dir / "v.json");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, from.size(), to);
    std::ofstream out(dir / "v.json");
    out << text;
  };

  SUBCASE("tampered model_type") {
    rewrite("\"tensor_lr\"", "\"mystery\"");
    CHECK_THROWS_WITH_AS(load_model(dir / "v.json"),
                         doctest::Contains("model_type"), FormatError);
  }
  SUBCASE("format version mismatch") {
    rewrite("\"format_version\": 1", "\"format_version\": 9");
    CHECK_THROWS_WITH_AS(load_model(dir / "v.json"),
                         doctest::Contains("format_version"), FormatError);
  }
  SUBCASE("factor shape inconsistent with input_shape") {
    rewrite("\"input_shape\": [\n  2,\n  2\n ]", "\"input_shape\": [\n  2,\n  3\n ]");
    CHECK_THROWS_WITH_AS(load_model(dir / "v.json"),
                         doctest::Contains("factors"), FormatError);
  }
  SUBCASE("missing field") {
    rewrite("\"num_classes\": 2,", "");
    CHECK_THROWS_WITH_AS(load_model(dir / "v.json"),
                         doctest::Contains("num_classes"), FormatError);
  }
}

TEST_CASE("dataset validation rejects malformed targets") {
  Rng rng(7);
  std::vector<DenseTensor> xs(2, DenseTensor(Shape{2, 2}));
  PatchDataset ds = dataset_from_labels(std::move(xs), {0, 1}, 2);
  ds.validate();
  ds.targets(0, 0) = 0.5;
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
  ds.targets(0, 0) = 1.0;
  ds.targets(0, 1) = 1.0;
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
}
