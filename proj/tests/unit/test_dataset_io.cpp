#include <filesystem>
#include <fstream>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bipedest/dataset_io.hpp"

using namespace bipedest;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bipedest_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GaitConfig small_gait() {
  GaitConfig g;
  g.n_steps = 2;
  g.stand_time = 0.5;
  return g;
}

}  // namespace

TEST(dataset_io, double_text_roundtrip) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 10000) {
    const std::uint64_t b = bits(rng);
    double x;
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    ++checked;
    const double y = parse_double(format_double(x));
    ASSERT_EQ(std::memcmp(&x, &y, sizeof x), 0) << format_double(x);
  }
  EXPECT_EQ(parse_double(format_double(-0.0)), 0.0);
  EXPECT_TRUE(std::signbit(parse_double(format_double(-0.0))));
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min())),
            std::numeric_limits<double>::denorm_min());
  EXPECT_THROW(parse_double("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_double(""), std::invalid_argument);
}

TEST(dataset_io, fnv1a_reference_values) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(dataset_io, schema) {
  const auto one = dataset_columns(1), two = dataset_columns(2);
  EXPECT_EQ(one.size(), 50u);
  EXPECT_EQ(two.size(), 65u);
  EXPECT_EQ(two.front(), "t");
  EXPECT_EQ(sidecar_path("a/b.csv"), fs::path("a/b.json"));
}

TEST(dataset_io, roundtrip_is_bit_exact) {
  const fs::path dir = scratch_dir("roundtrip");
  InitialBias b0;
  b0.w = Eigen::Vector3d(0.001, 0.002, -0.003);
  const Dataset d = simulate(small_gait(), NoiseConfig{}, 17, b0);
  const std::string h = write_dataset(d, dir / "d.csv");
  EXPECT_EQ(h, file_hash(dir / "d.csv"));
  EXPECT_TRUE(fs::exists(dir / "d.json"));

  const Dataset r = read_dataset(dir / "d.csv");
  ASSERT_EQ(r.size(), d.size());
  EXPECT_EQ(r.n_feet, 2);
  EXPECT_EQ(r.dt, d.dt);
  EXPECT_EQ(r.sensors.seed, 17u);
  ASSERT_TRUE(r.gait.has_value());
  EXPECT_EQ(r.gait->n_steps, 2);
  EXPECT_EQ(r.noise.w_bw, d.noise.w_bw);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const TruthSample &a = d.truth[k], &c = r.truth[k];
    ASSERT_EQ(a.t, c.t);
    ASSERT_EQ(a.r, c.r);
    ASSERT_EQ(a.v, c.v);
    ASSERT_EQ(a.a, c.a);
    ASSERT_EQ(a.q.coeffs(), c.q.coeffs());
    ASSERT_EQ(a.w, c.w);
    ASSERT_EQ(a.imu.f, c.imu.f);
    ASSERT_EQ(a.imu.w, c.imu.w);
    ASSERT_EQ(d.sensors.imu[k].f, r.sensors.imu[k].f);
    ASSERT_EQ(d.sensors.imu[k].w, r.sensors.imu[k].w);
    ASSERT_EQ(d.sensors.b_w[k], r.sensors.b_w[k]);
    for (int i = 0; i < 2; ++i) {
      ASSERT_EQ(a.feet[i].p, c.feet[i].p);
      ASSERT_EQ(a.feet[i].z.coeffs(), c.feet[i].z.coeffs());
      ASSERT_EQ(a.feet[i].in_contact, c.feet[i].in_contact);
      ASSERT_EQ(d.sensors.kin[k][i].s_p, r.sensors.kin[k][i].s_p);
      ASSERT_EQ(d.sensors.kin[k][i].s_z.coeffs(), r.sensors.kin[k][i].s_z.coeffs());
    }
  }
  ASSERT_EQ(r.sensors.events.size(), d.sensors.events.size());
  for (std::size_t e = 0; e < d.sensors.events.size(); ++e) {
    EXPECT_EQ(r.sensors.events[e].t, d.sensors.events[e].t);
    EXPECT_EQ(r.sensors.events[e].foot, d.sensors.events[e].foot);
  }
  // writing the re-read dataset gives the same bytes
  EXPECT_EQ(write_dataset(r, dir / "again.csv"), h);
  EXPECT_EQ(slurp(dir / "d.csv"), slurp(dir / "again.csv"));
}

TEST(dataset_io, same_seed_gives_identical_files) {
  const fs::path dir = scratch_dir("seed");
  write_dataset(simulate(small_gait(), NoiseConfig{}, 3), dir / "a.csv");
  write_dataset(simulate(small_gait(), NoiseConfig{}, 3), dir / "b.csv");
  write_dataset(simulate(small_gait(), NoiseConfig{}, 4), dir / "c.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
}

TEST(dataset_io, sidecar_metadata) {
  const fs::path dir = scratch_dir("meta");
  const std::string h = write_dataset(simulate(small_gait(), NoiseConfig{}, 8), dir / "d.csv");
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "d.json"));
  EXPECT_EQ(j.at("format_version"), kDatasetFormatVersion);
  EXPECT_EQ(j.at("csv_fnv1a"), h);
  EXPECT_EQ(j.at("seed"), 8);
  EXPECT_EQ(j.at("columns").size(), 65u);
  EXPECT_TRUE(j.contains("units"));
  EXPECT_EQ(gait_from_json(j.at("gait")).stand_time, 0.5);
  EXPECT_EQ(noise_from_json(j.at("noise")).w_z, NoiseConfig{}.w_z);
}

TEST(dataset_io, tampering_is_detected) {
  const fs::path dir = scratch_dir("tamper");
  write_dataset(simulate(small_gait(), NoiseConfig{}, 8), dir / "d.csv");
  std::string csv = slurp(dir / "d.csv");
  csv[csv.size() - 3] = csv[csv.size() - 3] == '1' ? '2' : '1';
  std::ofstream(dir / "d.csv", std::ios::binary | std::ios::trunc) << csv;
  EXPECT_THROW(read_dataset(dir / "d.csv"), std::runtime_error);
  EXPECT_THROW(read_dataset(dir / "missing.csv"), std::runtime_error);
}

TEST(dataset_io, unwritable_path_throws) {
  const Dataset d = simulate(small_gait(), NoiseConfig{}, 8);
  EXPECT_THROW(write_dataset(d, "/nonexistent_dir_xyz/d.csv"), std::runtime_error);
}

TEST(dataset_io, csv_reader) {
  const fs::path dir = scratch_dir("csv");
  std::ofstream(dir / "t.csv") << "a,b\n1,2.5\n-3,4e-3\n";
  const CsvTable t = read_csv(dir / "t.csv");
  EXPECT_EQ(t.column("b"), 1u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], 4e-3);
  EXPECT_THROW(t.column("c"), std::out_of_range);
  std::ofstream(dir / "bad.csv") << "a,b\n1\n";
  EXPECT_THROW(read_csv(dir / "bad.csv"), std::runtime_error);
  EXPECT_EQ(split_csv_line("x,,y").size(), 3u);
}
