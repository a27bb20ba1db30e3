#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <specaug/io.hpp>
#include <specaug/synthgen.hpp>

#include "helpers.hpp"

using namespace specaug;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("specaug_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Numbers, ShortestFormRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_EQ(code_of([] { io::parse_double("1.5x"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { io::parse_double(""); }), ErrorCode::ParseError);
}

TEST(KeyValues, SkipsCommentsAndTrims) {
  std::istringstream in("# header\n\n runs = 5 \nseed=7\n");
  const auto kv = io::parse_key_values(in, "cfg");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].key, "runs");
  EXPECT_EQ(kv[0].value, "5");
  EXPECT_EQ(kv[0].line, 3u);
  EXPECT_EQ(kv[1].value, "7");
}

TEST(KeyValues, MalformedLineNamesLocation) {
  std::istringstream in("runs=5\nbroken line\n");
  try {
    io::parse_key_values(in, "cfg.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("cfg.txt:2"), std::string::npos);
  }
}

TEST(LibraryCsv, RoundTrip) {
  std::mt19937_64 rng(2);
  const auto lib = specaug::testing::random_library(rng, {2, 3, 1}, 7);
  std::stringstream buf;
  io::write_library_csv(buf, lib);
  EXPECT_EQ(io::read_library_csv(buf), lib);
}

TEST(LibraryCsv, SyntheticColumnRoundTrip) {
  std::mt19937_64 rng(3);
  auto classes = specaug::testing::random_library(rng, {3, 2}, 4).classes();
  classes[0].members[1].provenance = {true, 0};
  classes[0].members[2].provenance = {true, 1};
  const SpectralLibrary lib(classes);
  std::stringstream buf;
  io::write_library_csv(buf, lib, true);
  EXPECT_EQ(buf.str().rfind("material,synthetic,band_0", 0), 0u);
  EXPECT_EQ(io::read_library_csv(buf), lib);
}

TEST(LibraryCsv, GroupsByFirstAppearance) {
  std::istringstream in("material,band_0,band_1\nsoil,0.1,0.2\nwater,0.3,0.4\nsoil,0.5,0.6\n");
  const auto lib = io::read_library_csv(in);
  ASSERT_EQ(lib.num_classes(), 2u);
  EXPECT_EQ(lib[0].material, "soil");
  EXPECT_EQ(lib[0].members.size(), 2u);
  EXPECT_EQ(lib.member(0, 1).values, (std::vector<double>{0.5, 0.6}));
}

TEST(LibraryCsv, RejectsMalformedRows) {
  EXPECT_EQ(code_of([] {
              std::istringstream in("name,band_0\nsoil,0.1\n");
              io::read_library_csv(in);
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] {
              std::istringstream in("material,band_0,band_1\nsoil,0.1\n");
              io::read_library_csv(in);
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] {
              std::istringstream in("material,band_0\nsoil,abc\n");
              io::read_library_csv(in);
            }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { io::read_library_csv(fs::path("/nonexistent/lib.csv")); }),
            ErrorCode::IoError);
}

TEST(ImageCsv, RoundTripWithSidecar) {
  const auto dir = scratch_dir("image");
  std::mt19937_64 rng(4);
  const HyperImage img(specaug::testing::random_matrix(rng, 6, 3), 2, 3);
  io::write_image_csv(dir / "img.csv", img);
  EXPECT_TRUE(fs::exists(io::sidecar_path(dir / "img.csv")));
  const auto back = io::read_image_csv(dir / "img.csv");
  EXPECT_EQ(back.pixels(), img.pixels());
  EXPECT_EQ(back.rows(), img.rows());
  EXPECT_EQ(back.cols(), img.cols());
}

TEST(ImageCsv, HeaderOptional) {
  std::istringstream plain("0.1,0.2\n0.3,0.4\n");
  std::istringstream with_header("band_0,band_1\n0.1,0.2\n0.3,0.4\n");
  EXPECT_EQ(io::read_image_csv(plain).pixels(), io::read_image_csv(with_header).pixels());
}

TEST(ImageCsv, SidecarMismatchIsReported) {
  const auto dir = scratch_dir("sidecar");
  std::ofstream(dir / "img.csv") << "0.1,0.2\n0.3,0.4\n";
  std::ofstream(io::sidecar_path(dir / "img.csv")) << "rows=3\ncols=1\nL=2\n";
  EXPECT_EQ(code_of([&] { io::read_image_csv(dir / "img.csv"); }), ErrorCode::DimensionMismatch);
}

TEST(Dataset, RoundTrip) {
  const auto dir = scratch_dir("dataset");
  SynthConfig cfg;
  cfg.bands = 12;
  cfg.pixels = 9;
  cfg.seed = 5;
  const auto ds = synthesize_image(cfg);
  io::write_dataset(dir, ds, cfg);
  const auto back = io::read_dataset(dir);
  EXPECT_EQ(back.dataset.image.pixels(), ds.image.pixels());
  EXPECT_EQ(back.dataset.clean, ds.clean);
  EXPECT_EQ(back.dataset.true_abundances.values, ds.true_abundances.values);
  EXPECT_EQ(back.dataset.true_selections, ds.true_selections);
  EXPECT_EQ(back.dataset.library, ds.library);
  EXPECT_EQ(back.dataset.scene_pools, ds.scene_pools);
  EXPECT_EQ(back.config.seed, 5u);
  EXPECT_EQ(back.config.bands, 12u);
  EXPECT_EQ(back.config.dirichlet, cfg.dirichlet);
}

TEST(Dataset, NoiselessManifest) {
  const auto dir = scratch_dir("noiseless");
  SynthConfig cfg;
  cfg.bands = 5;
  cfg.pixels = 3;
  cfg.snr_db = kNoNoise;
  io::write_dataset(dir, synthesize_image(cfg), cfg);
  EXPECT_TRUE(std::isinf(io::read_dataset(dir).config.snr_db));
}
