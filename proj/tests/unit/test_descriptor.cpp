#include "radarloop/descriptor.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace radarloop;

namespace {

CartContext random_descriptor(std::mt19937_64& rng, int rows, int cols, double empty_fraction = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CartContext d;
  d.values.resize(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) d.values(i, j) = u(rng) < empty_fraction ? kEmptyCell : 2.0 * u(rng);
  }
  return d;
}

// Column-wise distance written out independently of the library.
double brute_force_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double sum = 0.0;
  int used = 0;
  for (int j = 0; j < a.cols(); ++j) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    bool all_empty_a = true, all_empty_b = true;
    for (int i = 0; i < a.rows(); ++i) {
      dot += a(i, j) * b(i, j);
      na += a(i, j) * a(i, j);
      nb += b(i, j) * b(i, j);
      all_empty_a = all_empty_a && a(i, j) == -1.0;
      all_empty_b = all_empty_b && b(i, j) == -1.0;
    }
    if ((all_empty_a && all_empty_b) || na == 0.0 || nb == 0.0) continue;
    sum += 0.5 * (1.0 - dot / std::sqrt(na * nb));
    ++used;
  }
  return used ? sum / used : 1.0;
}

}  // namespace

TEST(Encode, SinglePointIntensitySum) {
  DescriptorConfig config;
  // Cell (12, 7): forward 3.2 m, lateral -4.1 m with 1.5 m cells over +-15 m.
  const CartContext d = encode({{Vec3(3.2, -4.1, 0.4), 500.0}}, 0.0, config);
  ASSERT_EQ(d.rows(), 20);
  ASSERT_EQ(d.cols(), 20);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) EXPECT_EQ(d.values(i, j), (i == 12 && j == 7) ? 0.5 : -1.0) << i << "," << j;
  }
}

TEST(Encode, EmptySubmapAllEmptyCells) {
  const CartContext d = encode({}, 33.0, DescriptorConfig{});
  EXPECT_TRUE((d.values.array() == kEmptyCell).all());
}

TEST(Encode, MaxHeightAndMaxIntensity) {
  DescriptorConfig config;
  config.mode = EncodingMode::MaxHeight;
  const PointCloud cloud = {{Vec3(0.2, 0.2, 1.0), 9.0}, {Vec3(0.3, 0.4, 2.5), 3.0}};
  EXPECT_EQ(encode(cloud, 0.0, config).values(10, 10), 2.5);
  config.mode = EncodingMode::MaxIntensity;
  EXPECT_EQ(encode(cloud, 0.0, config).values(10, 10), 9.0);
  config.mode = EncodingMode::IntensitySum;
  EXPECT_DOUBLE_EQ(encode(cloud, 0.0, config).values(10, 10), 0.012);
}

TEST(Encode, HeadingRotatesIntoSensorFrame) {
  // A point 5 m north of a keyframe heading north lies straight ahead.
  const CartContext d = encode({{Vec3(0.1, 5.0, 0.0), 100.0}}, 90.0, DescriptorConfig{});
  EXPECT_EQ(d.values(13, 9), 0.1);
}

TEST(Encode, DropsPointsOutsideRectangle) {
  const CartContext d = encode({{Vec3(15.5, 0, 0), 100.0}, {Vec3(0, -15.5, 0), 100.0}}, 0.0, DescriptorConfig{});
  EXPECT_TRUE((d.values.array() == kEmptyCell).all());
}

TEST(Encode, CellsAreEmptyOrNonNegative) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_real_distribution<double> inten(0.0, 300.0);
  PointCloud cloud;
  for (int i = 0; i < 2000; ++i) cloud.push_back({Vec3(u(rng), u(rng), u(rng) / 5.0), inten(rng)});
  const CartContext d = encode(cloud, 17.0, DescriptorConfig{});
  EXPECT_TRUE((d.values.array() == kEmptyCell || d.values.array() >= 0.0).all());
}

TEST(Encode, InvalidConfigThrows) {
  DescriptorConfig config;
  config.n_lo = 0;
  EXPECT_THROW(encode({}, 0.0, config), std::invalid_argument);
  EXPECT_THROW(encoding_from_string("polar"), std::invalid_argument);
  EXPECT_EQ(encoding_from_string(to_string(EncodingMode::MaxHeight)), EncodingMode::MaxHeight);
}

TEST(DoubleFlip, Examples) {
  CartContext d;
  d.values.resize(2, 2);
  d.values << 1, 2, 3, 4;
  Eigen::Matrix2d expected;
  expected << 4, 3, 2, 1;
  EXPECT_EQ(double_flip(d).values, Eigen::MatrixXd(expected));
  CartContext c{Eigen::MatrixXd::Constant(5, 7, 0.25)};
  EXPECT_EQ(double_flip(c), c);
}

TEST(DoubleFlip, InvolutionExact) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const CartContext d = random_descriptor(rng, 20, 20);
    EXPECT_EQ(double_flip(double_flip(d)), d);
  }
}

TEST(CosineDistance, Examples) {
  std::mt19937_64 rng(3);
  const CartContext a = random_descriptor(rng, 6, 6, 0.0);
  EXPECT_NEAR(cosine_distance(a, a), 0.0, 1e-15);
  CartContext p{Eigen::MatrixXd::Zero(3, 1)}, n{Eigen::MatrixXd::Zero(3, 1)};
  p.values(0, 0) = 1.0;
  n.values(0, 0) = -1.0;
  EXPECT_DOUBLE_EQ(cosine_distance(p, n), 1.0);
  const CartContext empty{Eigen::MatrixXd::Constant(4, 4, kEmptyCell)};
  EXPECT_EQ(cosine_distance(empty, empty), 1.0);
  const CartContext zero{Eigen::MatrixXd::Zero(4, 4)};
  EXPECT_EQ(cosine_distance(zero, random_descriptor(rng, 4, 4)), 1.0);
}

TEST(CosineDistance, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 200; ++k) {
    const CartContext a = random_descriptor(rng, 4, 4, 0.4);
    const CartContext b = random_descriptor(rng, 4, 4, 0.4);
    EXPECT_NEAR(cosine_distance(a, b), brute_force_distance(a.values, b.values), 1e-12);
  }
}

TEST(CosineDistance, RangeAndFlipConsistency) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const CartContext a = random_descriptor(rng, 20, 20, 0.5);
    const CartContext b = random_descriptor(rng, 20, 20, 0.5);
    const double d = cosine_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(d, cosine_distance(double_flip(a), double_flip(b)));
  }
}

TEST(CosineDistance, DimensionMismatchThrows) {
  EXPECT_THROW(cosine_distance(CartContext{Eigen::MatrixXd::Zero(3, 3)}, CartContext{Eigen::MatrixXd::Zero(3, 4)}),
               std::invalid_argument);
}

TEST(CosineDistance, OpposingViewpointMatchesFlippedDescriptor) {
  // The same world-aligned cloud seen with headings 180 deg apart.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-14.0, 14.0);
  std::uniform_real_distribution<double> inten(1.0, 200.0);
  int better = 0;
  for (int k = 0; k < 50; ++k) {
    PointCloud cloud;
    for (int i = 0; i < 300; ++i) cloud.push_back({Vec3(u(rng), 0.5 * u(rng) + 3.0, 0.0), inten(rng)});
    std::uniform_real_distribution<double> yaw(-180.0, 180.0);
    const double h = yaw(rng);
    const CartContext a = encode(cloud, h, DescriptorConfig{});
    const CartContext b = encode(cloud, h + 180.0, DescriptorConfig{});
    if (cosine_distance(a, double_flip(b)) < cosine_distance(a, b)) ++better;
  }
  EXPECT_EQ(better, 50);
}

TEST(Descriptor, WriteCsv) {
  CartContext d;
  d.values.resize(2, 2);
  d.values << -1, 0.5, 2, -1;
  std::ostringstream os;
  write_descriptor(os, d);
  EXPECT_EQ(os.str(), "-1,0.5\n2,-1\n");
}
