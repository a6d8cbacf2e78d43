#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include <unistd.h>

#include <json.hpp>

#include "dnf/checkpoint.hpp"
#include "dnf/common.hpp"
#include "dnf/merge.hpp"
#include "merge_support.hpp"

namespace dnf {
namespace {

namespace fs = std::filesystem;
using namespace testing_support;

TEST(TaskVector, Examples) {
  const NamedTensorSet base{{"w", vec({1, 2})}};
  const NamedTensorSet model{{"w", vec({3, 1})}};
  EXPECT_EQ(values(task_vector(model, base).at("w")), (std::vector<float>{2, -1}));
  EXPECT_EQ(values(task_vector(model, model).at("w")), (std::vector<float>{0, 0}));
}

TEST(TaskVector, ReconstructsModel) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto base = random_set(rng);
    const auto model = same_shape_random(base, rng);
    const auto tau = task_vector(model, base);
    const WeightedDelta d[] = {{&tau, 1.0f}};
    const auto back = task_arithmetic_merge(base, d);
    for (const auto& [name, t] : model) {
      for (Eigen::Index i = 0; i < t.data.size(); ++i) {
        EXPECT_LE(std::fabs(back.at(name).data[i] - t.data[i]),
                  1e-6 * std::max(1.0f, std::fabs(t.data[i])));
      }
    }
  }
}

TEST(TaskVector, IncompatibleSets) {
  const NamedTensorSet a{{"w", vec({1, 2})}};
  const NamedTensorSet b{{"w", vec({1, 2, 3})}};
  const NamedTensorSet c{{"v", vec({1, 2})}};
  try {
    task_vector(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  try {
    task_vector(a, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingTensor);
  }
}

TEST(TaskArithmetic, HandExample) {
  const NamedTensorSet base{{"w", vec({0, 0})}};
  const NamedTensorSet t1{{"w", vec({2, 4})}};
  const NamedTensorSet t2{{"w", vec({-2, 0})}};
  const WeightedDelta d[] = {{&t1, 0.5f}, {&t2, 0.5f}};
  EXPECT_EQ(values(task_arithmetic_merge(base, d).at("w")), (std::vector<float>{0, 2}));
}

TEST(TaskArithmetic, LinearAgainstScalarReference) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> wdist(-1.0f, 1.0f);
  for (int trial = 0; trial < 30; ++trial) {
    const auto base = random_set(rng);
    const auto t1 = same_shape_random(base, rng);
    const auto t2 = same_shape_random(base, rng);
    const float a = wdist(rng), b = wdist(rng);
    const WeightedDelta d[] = {{&t1, a}, {&t2, b}};
    const auto merged = task_arithmetic_merge(base, d);
    for (const auto& [name, t] : base) {
      for (Eigen::Index i = 0; i < t.data.size(); ++i) {
        const double ref = double(t.data[i]) + double(a) * t1.at(name).data[i] +
                           double(b) * t2.at(name).data[i];
        EXPECT_NEAR(merged.at(name).data[i], ref, 1e-5 * std::max(1.0, std::fabs(ref)));
      }
    }
  }
}

TEST(TaskArithmetic, WeightScalesDeltaLinearly) {
  std::mt19937_64 rng(3);
  const auto base = random_set(rng);
  const auto tau = same_shape_random(base, rng);
  const WeightedDelta one[] = {{&tau, 0.5f}};
  const WeightedDelta two[] = {{&tau, 1.0f}};
  const auto m1 = task_vector(task_arithmetic_merge(base, one), base);
  const auto m2 = task_vector(task_arithmetic_merge(base, two), base);
  for (const auto& [name, t] : m1) {
    for (Eigen::Index i = 0; i < t.data.size(); ++i) {
      EXPECT_NEAR(2.0f * t.data[i], m2.at(name).data[i], 1e-5);
    }
  }
}

TEST(Ties, Walkthrough) {
  const NamedTensorSet base{{"w", vec({0, 0, 0, 0})}};
  const NamedTensorSet t1{{"w", vec({3, -1, 0, 2})}};
  const NamedTensorSet t2{{"w", vec({-3, 4, 0, 2})}};
  const WeightedDelta d[] = {{&t1, 1.0f}, {&t2, 1.0f}};
  EXPECT_EQ(ties_keep(t1.at("w").data, 0.5), (std::vector<Eigen::Index>{0, 3}));
  EXPECT_EQ(ties_keep(t2.at("w").data, 0.5), (std::vector<Eigen::Index>{0, 1}));
  const auto merged = values(ties_merge(base, d, 0.5).at("w"));
  EXPECT_EQ(merged, (std::vector<float>{0, 4, 0, 2}));
  EXPECT_EQ(merged, ties_reference({0, 0, 0, 0}, {{{3, -1, 0, 2}, 1.0f}, {{-3, 4, 0, 2}, 1.0f}}, 0.5));
}

TEST(Ties, KeepCountAndTieBreak) {
  Eigen::ArrayXf v(5);
  v << 1, -1, 1, 0.5f, -1;
  EXPECT_EQ(ties_keep(v, 0.4), (std::vector<Eigen::Index>{0, 1}));
  Eigen::ArrayXf ten = Eigen::ArrayXf::LinSpaced(10, 1, 10);
  EXPECT_EQ(ties_keep(ten, 0.3).size(), 3u);
  EXPECT_EQ(ties_keep(ten, 0.05).size(), 1u);
  EXPECT_EQ(ties_keep(ten, 1.0).size(), 10u);
  EXPECT_THROW(ties_keep(ten, 0.0), Error);
  EXPECT_THROW(ties_keep(ten, 1.01), Error);
}

TEST(Ties, MatchesScalarReference) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> wdist(0.0f, 1.0f);
  std::uniform_real_distribution<double> ddist(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto base = random_set(rng);
    const auto t1 = same_shape_random(base, rng);
    const auto t2 = same_shape_random(base, rng);
    const auto t3 = same_shape_random(base, rng);
    const float a = wdist(rng), b = wdist(rng), c = wdist(rng);
    const double density = ddist(rng);
    const WeightedDelta d[] = {{&t1, a}, {&t2, b}, {&t3, c}};
    const auto merged = ties_merge(base, d, density);
    for (const auto& [name, t] : base) {
      const auto ref = ties_reference(values(t),
                                      {{values(t1.at(name)), a},
                                       {values(t2.at(name)), b},
                                       {values(t3.at(name)), c}},
                                      density);
      const auto got = values(merged.at(name));
      ASSERT_EQ(got.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(got[i], ref[i], 1e-5 * std::max(1.0f, std::fabs(ref[i])));
      }
    }
  }
}

TEST(Ties, SingleDeltaFullDensityEqualsTaskArithmetic) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> wdist(-2.0f, 2.0f);
  for (int trial = 0; trial < 50; ++trial) {
    const auto base = random_set(rng, trial % 2 == 0);
    const auto tau = same_shape_random(base, rng);
    const WeightedDelta d[] = {{&tau, trial == 0 ? 1.0f : wdist(rng)}};
    EXPECT_TRUE(bit_equal(ties_merge(base, d, 1.0), task_arithmetic_merge(base, d)));
  }
}

TEST(Ties, ZeroDeltasReturnBaseBitExactly) {
  std::mt19937_64 rng(6);
  const auto base = random_set(rng, true);
  auto zero = base;
  for (auto& [name, t] : zero) t.data.setZero();
  const WeightedDelta d[] = {{&zero, 0.7f}, {&zero, 0.3f}};
  EXPECT_TRUE(bit_equal(ties_merge(base, d, 0.5), base));
  EXPECT_TRUE(bit_equal(task_arithmetic_merge(base, d), base));
}

TEST(Ties, IncompatibleDeltaRejected) {
  const NamedTensorSet base{{"w", vec({0, 0})}};
  const NamedTensorSet bad{{"w", vec({1, 2, 3})}};
  const WeightedDelta d[] = {{&bad, 1.0f}};
  EXPECT_THROW(ties_merge(base, d, 1.0), Error);
  EXPECT_THROW(task_arithmetic_merge(base, d), Error);
}

TEST(Checkpoint, RandomRoundTripsAreBitExact) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_set(rng, trial % 3 == 0);
    const auto bytes = encode_checkpoint(s);
    EXPECT_TRUE(bit_equal(decode_checkpoint(bytes), s));
    EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
  }
}

TEST(Checkpoint, LayoutIsSafetensorsCompatible) {
  const NamedTensorSet s{{"b", vec({1.0f})}, {"a", Tensor({2, 1}, Eigen::ArrayXf::Constant(2, 2.0f))}};
  const auto bytes = encode_checkpoint(s);
  std::uint64_t n = 0;
  for (int i = 7; i >= 0; --i) n = (n << 8) | static_cast<unsigned char>(bytes[i]);
  EXPECT_EQ(n % 8, 0u);
  const auto header = nlohmann::ordered_json::parse(bytes.substr(8, n));
  EXPECT_EQ(header.begin().key(), "a");
  EXPECT_EQ(header["a"]["dtype"], "F32");
  EXPECT_EQ(header["a"]["shape"], nlohmann::json::array({2, 1}));
  EXPECT_EQ(header["a"]["data_offsets"], nlohmann::json::array({0, 8}));
  EXPECT_EQ(header["b"]["data_offsets"], nlohmann::json::array({8, 12}));
  EXPECT_EQ(bytes.size(), 8 + n + 12);
  float first;
  std::memcpy(&first, bytes.data() + 8 + n, 4);
  EXPECT_EQ(first, 2.0f);
}

TEST(Checkpoint, MetadataEntryIsIgnored) {
  const std::string header =
      R"({"__metadata__":{"format":"pt"},"w":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}})";
  std::string bytes;
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((header.size() >> (8 * i)) & 0xFF));
  bytes += header;
  const float one = 1.0f;
  bytes.append(reinterpret_cast<const char*>(&one), 4);
  const auto s = decode_checkpoint(bytes);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.at("w").data[0], 1.0f);
}

TEST(Checkpoint, MalformedInputsAreFormatErrors) {
  const NamedTensorSet s{{"w", vec({1, 2})}};
  const auto good = encode_checkpoint(s);
  auto expect_format = [](const std::string& b) {
    try {
      decode_checkpoint(b);
      ADD_FAILURE() << "decoded malformed bytes";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::FormatError);
    }
  };
  expect_format("");
  expect_format(good.substr(0, 5));
  expect_format(good.substr(0, good.size() - 1));
  expect_format(good + "xxxx");
  auto bf16 = good;
  bf16.replace(bf16.find("F32"), 3, "F16");
  expect_format(bf16);
  auto huge = good;
  huge[7] = '\x7f';
  expect_format(huge);
  auto notjson = good;
  notjson[8] = '[';
  expect_format(notjson);
}

TEST(Checkpoint, FileIo) {
  const auto dir = fs::temp_directory_path() / "dnf_ckpt_test";
  fs::create_directories(dir);
  const NamedTensorSet s{{"w", vec({1, 2, 3})}};
  write_checkpoint(dir / "m.safetensors", s);
  EXPECT_TRUE(bit_equal(read_checkpoint(dir / "m.safetensors"), s));
  try {
    read_checkpoint(dir / "missing.safetensors");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
  fs::remove_all(dir);
}

class SweepTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(8);
    base_ = random_set(rng);
    while (base_.size() < 3) base_ = random_set(rng);
    fp_ = same_shape_random(base_, rng);
    donor_ = same_shape_random(base_, rng);
    dir_ = fs::temp_directory_path() / ("dnf_sweep_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  NamedTensorSet base_, fp_, donor_;
  fs::path dir_;
};

TEST_F(SweepTest, NineAlphasNineCheckpoints) {
  const std::vector<double> alphas{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  const auto r = sweep_merge(base_, fp_, donor_, MergeStrategy::TaskArithmetic, alphas, 1.0, dir_);
  EXPECT_EQ(r.checkpoints.size(), 9u);
  for (const auto& p : r.checkpoints) EXPECT_TRUE(fs::exists(p));
  const auto m = nlohmann::json::parse(read_file(r.manifest));
  EXPECT_EQ(m["entries"].size(), 9u);
  EXPECT_EQ(m["strategy"], "task_arithmetic");
}

TEST_F(SweepTest, IdenticalDonorReproducesFingerprintedModel) {
  const std::vector<double> alphas{0.5};
  const auto r = sweep_merge(base_, fp_, fp_, MergeStrategy::TaskArithmetic, alphas, 1.0, dir_);
  const auto merged = read_checkpoint(r.checkpoints.at(0));
  for (const auto& [name, t] : fp_) {
    for (Eigen::Index i = 0; i < t.data.size(); ++i) {
      EXPECT_LE(std::fabs(merged.at(name).data[i] - t.data[i]),
                1e-6 * std::max(1.0f, std::fabs(t.data[i])));
    }
  }
}

TEST_F(SweepTest, AlphaOneIsFingerprintedModel) {
  const std::vector<double> alphas{1.0};
  for (auto strategy : {MergeStrategy::TaskArithmetic, MergeStrategy::Ties}) {
    const auto r = sweep_merge(base_, fp_, donor_, strategy, alphas, 1.0, dir_);
    const auto merged = read_checkpoint(r.checkpoints.at(0));
    for (const auto& [name, t] : fp_) {
      for (Eigen::Index i = 0; i < t.data.size(); ++i) {
        EXPECT_LE(std::fabs(merged.at(name).data[i] - t.data[i]),
                  1e-6 * std::max(1.0f, std::fabs(t.data[i])));
      }
    }
  }
}

TEST_F(SweepTest, TiesManifestReplayIsByteIdentical) {
  const std::vector<double> alphas{0.9, 0.5, 0.2};
  const auto r = sweep_merge(base_, fp_, donor_, MergeStrategy::Ties, alphas, 0.6, dir_);
  const auto m = nlohmann::json::parse(read_file(r.manifest));
  const auto tau_fp = task_vector(fp_, base_);
  const auto tau_donor = task_vector(donor_, base_);
  for (const auto& e : m["entries"]) {
    const auto a1 = e["alpha1"].get<double>();
    const WeightedDelta d[] = {{&tau_fp, static_cast<float>(a1)},
                               {&tau_donor, static_cast<float>(e["alpha2"].get<double>())}};
    const auto replay = ties_merge(base_, d, m["density"].get<double>());
    EXPECT_EQ(encode_checkpoint(replay), read_file(dir_ / e["path"].get<std::string>()));
  }
}

TEST_F(SweepTest, BadArguments) {
  const std::vector<double> none;
  const std::vector<double> out_of_range{1.5};
  EXPECT_THROW(sweep_merge(base_, fp_, donor_, MergeStrategy::Ties, none, 0.5, dir_), Error);
  EXPECT_THROW(sweep_merge(base_, fp_, donor_, MergeStrategy::Ties, out_of_range, 0.5, dir_), Error);
  const NamedTensorSet other{{"zzz", vec({1})}};
  const std::vector<double> half{0.5};
  EXPECT_THROW(sweep_merge(base_, other, donor_, MergeStrategy::Ties, half, 0.5, dir_), Error);
}

}  // namespace
}  // namespace dnf
