// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include <unistd.h>

#include "cbct/errors.hpp"
#include "cbct/io.hpp"

namespace cbct {
namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("cbct_io_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

CbctGeometry geometry() {
  CbctGeometry g;
  g.n_u = 6;
  g.n_v = 5;
  g.d_u = 0.1;
  g.d_v = 1.0 / 3.0;
  g.n_p = 3;
  g.n_x = g.n_y = g.n_z = 4;
  g.d_x = g.d_y = g.d_z = 0.7;
  g.d = 123.456789;
  g.cap_d = 1000.0000001;
  return g;
}

std::vector<Projection> random_stack(const CbctGeometry& g) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> dist(-1e3f, 1e3f);
  std::vector<Projection> stack;
  for (int s = 0; s < g.n_p; ++s) {
    Projection p(g.n_u, g.n_v);
    for (float& x : p.samples()) x = dist(rng);
    stack.push_back(p);
  }
  stack[0].samples()[0] = -0.0f;
  stack[0].samples()[1] = std::numeric_limits<float>::denorm_min();
  return stack;
}

std::vector<char> bytes_of(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 123.456789, 1e-300, 2.5}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(2.5), "2.5");
}

TEST_F(TempDir, GeometryRoundTrip) {
  save_geometry(dir_ / "g.cfg", geometry());
  EXPECT_EQ(load_geometry(dir_ / "g.cfg"), geometry());
}

TEST_F(TempDir, KeyValueParsing) {
  std::ofstream(dir_ / "kv.cfg") << "# comment\n\n a = 1 \nb=two words\n";
  const KeyValues kv = read_key_values(dir_ / "kv.cfg");
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two words");
  std::ofstream(dir_ / "bad.cfg") << "no equals sign\n";
  EXPECT_THROW(read_key_values(dir_ / "bad.cfg"), IoError);
  EXPECT_THROW(read_key_values(dir_ / "absent.cfg"), IoError);
}

TEST_F(TempDir, GeometryErrors) {
  std::ofstream(dir_ / "g.cfg") << "n_u=4\n";
  EXPECT_THROW(load_geometry(dir_ / "g.cfg"), IoError);
  save_geometry(dir_ / "g2.cfg", geometry());
  std::ofstream(dir_ / "g2.cfg", std::ios::app) << "n_x=abc\n";
  EXPECT_THROW(load_geometry(dir_ / "g2.cfg"), IoError);
}

TEST_F(TempDir, ProjectionRoundTripIsBitIdentical) {
  const CbctGeometry g = geometry();
  const auto stack = random_stack(g);
  const DatasetMeta meta{g, DataKind::projections, ProjectionKind::raw, VolumeLayout::i_major};
  write_projections(dir_, stack, meta);
  EXPECT_TRUE(fs::exists(dir_ / "proj_00000.raw"));
  EXPECT_TRUE(fs::exists(dir_ / "proj_00002.raw"));
  EXPECT_EQ(fs::file_size(dir_ / "proj_00001.raw"), 4u * 6 * 5);
  const ProjectionDataset ds = read_projections(dir_);
  EXPECT_EQ(ds.meta, meta);
  ASSERT_EQ(ds.stack.size(), stack.size());
  for (std::size_t s = 0; s < stack.size(); ++s)
    EXPECT_EQ(std::memcmp(ds.stack[s].data(), stack[s].data(), 4 * stack[s].samples().size()), 0);

  // Byte stream is stable: writing again gives identical files.
  const auto first = bytes_of(dir_ / "proj_00001.raw");
  const auto meta_bytes = bytes_of(dir_ / kMetaFile);
  write_projections(dir_, stack, meta);
  EXPECT_EQ(bytes_of(dir_ / "proj_00001.raw"), first);
  EXPECT_EQ(bytes_of(dir_ / kMetaFile), meta_bytes);
}

TEST_F(TempDir, LittleEndianBytes) {
  const std::vector<float> v{1.0f};
  write_floats(dir_ / "one.raw", v);
  EXPECT_EQ(bytes_of(dir_ / "one.raw"), (std::vector<char>{0, 0, static_cast<char>(0x80), 0x3f}));
}

TEST_F(TempDir, MissingSidecar) {
  try {
    read_projections(dir_);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing metadata"), std::string::npos);
  }
}

TEST_F(TempDir, WrongFileSizeCitesExpectedBytes) {
  const CbctGeometry g = geometry();
  write_projections(dir_, random_stack(g), {g, DataKind::projections, ProjectionKind::raw, VolumeLayout::i_major});
  fs::resize_file(dir_ / "proj_00001.raw", 100);
  try {
    read_projections(dir_);
    FAIL();
  } catch (const IoError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("proj_00001.raw"), std::string::npos) << what;
    EXPECT_NE(what.find("120"), std::string::npos) << what;  // 4 * 6 * 5
  }
  fs::remove(dir_ / "proj_00002.raw");
  EXPECT_THROW(read_projections(dir_), IoError);
}

TEST_F(TempDir, MetaMismatchOnWrite) {
  const CbctGeometry g = geometry();
  auto stack = random_stack(g);
  DatasetMeta meta{g, DataKind::projections, ProjectionKind::raw, VolumeLayout::i_major};
  stack.pop_back();
  EXPECT_THROW(write_projections(dir_, stack, meta), ShapeError);
  stack = random_stack(g);
  meta.projection_kind = ProjectionKind::filtered;
  EXPECT_THROW(write_projections(dir_, stack, meta), ValidationError);
}

TEST_F(TempDir, CorruptSidecar) {
  const CbctGeometry g = geometry();
  write_projections(dir_, random_stack(g), {g, DataKind::projections, ProjectionKind::raw, VolumeLayout::i_major});
  std::ofstream(dir_ / kMetaFile, std::ios::app) << "sample_type=float64be\n";
  EXPECT_THROW(read_projections(dir_), IoError);
}

Volume ramp_volume(int n) {
  Volume v(n, n, n);
  float x = 0.0f;
  for (float& s : v.samples()) s = (x += 0.37f);
  return v;
}

TEST_F(TempDir, SlicesHaveExpectedFilesAndOffsets) {
  const CbctGeometry g = geometry();
  const Volume v = ramp_volume(4);
  const SliceSet set = write_volume_slices(v, {g, DataKind::volume, ProjectionKind::raw, VolumeLayout::i_major}, dir_);
  EXPECT_EQ(set.n_z, 4);
  EXPECT_EQ(set.n_x, 4);
  EXPECT_EQ(set.n_y, 4);
  for (int k = 0; k < 4; ++k) {
    const fs::path f = dir_ / slice_file_name(k);
    ASSERT_TRUE(fs::exists(f));
    EXPECT_EQ(fs::file_size(f), 64u);
  }
  EXPECT_EQ(slice_file_name(3), "slice_00003.raw");
  const auto bytes = bytes_of(dir_ / "slice_00003.raw");
  float value;
  std::memcpy(&value, bytes.data() + 4 * (2 * 4 + 1), 4);
  EXPECT_EQ(value, v.at(1, 2, 3));
  const auto plane = read_floats(dir_ / "slice_00002.raw", 16);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) EXPECT_EQ(plane[j * 4 + i], v.at(i, j, 2));
}

TEST_F(TempDir, VolumeRoundTripIsBitIdentical) {
  const CbctGeometry g = geometry();
  const Volume v = ramp_volume(4);
  write_volume_slices(v, {g, DataKind::volume, ProjectionKind::raw, VolumeLayout::i_major}, dir_);
  const Volume back = read_volume_slices(dir_);
  EXPECT_EQ(std::memcmp(back.samples().data(), v.samples().data(), 4 * v.size()), 0);
  EXPECT_THROW(read_projections(dir_), IoError);
}

TEST_F(TempDir, KMajorVolumeRejected) {
  const CbctGeometry g = geometry();
  try {
    write_volume_slices(Volume(4, 4, 4, VolumeLayout::k_major),
                        {g, DataKind::volume, ProjectionKind::raw, VolumeLayout::i_major}, dir_);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("reshape"), std::string::npos);
  }
}

TEST_F(TempDir, TruncatedSlice) {
  const CbctGeometry g = geometry();
  write_volume_slices(ramp_volume(4), {g, DataKind::volume, ProjectionKind::raw, VolumeLayout::i_major}, dir_);
  fs::resize_file(dir_ / "slice_00001.raw", 63);
  EXPECT_THROW(read_volume_slices(dir_), IoError);
}

}  // namespace
}  // namespace cbct
