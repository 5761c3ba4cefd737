#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "vstitch/config.hpp"
#include "vstitch/error.hpp"
#include "vstitch/io.hpp"
#include "vstitch/plot.hpp"

namespace vstitch {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vstitch_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Config, DefaultsArePublishedValues) {
  std::istringstream empty("");
  const AppConfig c = parse_config(empty);
  EXPECT_EQ(c.grid, (GridShape{6, 8}));
  EXPECT_EQ(c.pipeline.smoothing.window, 7);
  EXPECT_EQ(c.pipeline.smoothing.weight_data, 1.0);
  EXPECT_EQ(c.pipeline.smoothing.weight_smooth, 50.0);
  EXPECT_EQ(c.pipeline.smoothing.weight_space, 10.0);
  EXPECT_EQ(c.pipeline.smoothing.weight_online, 0.1);
  EXPECT_EQ(c.pipeline.smoothing.alpha, 10.0);
  EXPECT_EQ(c.pipeline.smoothing.betas, (std::vector<double>{0.9, 0.3, 0.1}));
  EXPECT_EQ(c.warp.lambda_tmp, 5.0);
  EXPECT_EQ(c.warp.lambda_spt, 10.0);
  EXPECT_EQ(c.warp.mu_spt, 20.0);
  EXPECT_EQ(c.warp.omega_spt, 0.1);
  EXPECT_EQ(c.scene.frame_height, 360);
  EXPECT_EQ(c.scene.frame_width, 480);
}

TEST(Config, ParsesAndRoundTrips) {
  std::istringstream in(
      "[grid]\nrows = 4\ncols = 5\n[smoothing]\nwindow = 5\nbetas = 0.8, 0.2\n"
      "[scene]\ntexture = checker_blobs\ninteger_positions = true\n[scene_tgt]\nvelocity_x = 1.5\n"
      "[estimator]\nexec = serial\n");
  const AppConfig c = parse_config(in);
  EXPECT_EQ(c.grid, (GridShape{4, 5}));
  EXPECT_EQ(c.pipeline.smoothing.betas, (std::vector<double>{0.8, 0.2}));
  EXPECT_EQ(c.scene.texture, TextureKind::checker_blobs);
  EXPECT_TRUE(c.scene.integer_positions);
  EXPECT_EQ(c.scene.tgt.velocity.x(), 1.5);
  EXPECT_EQ(c.estimator.exec, kernels::Exec::serial);

  std::ostringstream out;
  write_config(out, c);
  std::istringstream back(out.str());
  const AppConfig d = parse_config(back);
  std::ostringstream again;
  write_config(again, d);
  EXPECT_EQ(out.str(), again.str());
}

TEST(Config, RejectsTyposAndBadValues) {
  const auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  };
  EXPECT_THROW(parse("[smoothing]\nwindoww = 7\n"), InvalidArgument);
  EXPECT_THROW(parse("[smoothin]\nwindow = 7\n"), InvalidArgument);
  EXPECT_THROW(parse("[smoothing]\nwindow = seven\n"), InvalidArgument);
  EXPECT_THROW(parse("[smoothing]\nwindow = 6\n"), InvalidArgument);
  EXPECT_THROW(parse("[scene]\noverlap = 0.95\n"), InvalidSpec);
  EXPECT_THROW(load_config("/nonexistent/vstitch.ini"), InvalidArgument);
}

TEST(Io, PngRoundTripIsExactOnEightBitValues) {
  const fs::path dir = scratch_dir("png");
  Frame f(5, 7, 3);
  for (std::size_t i = 0; i < f.pixels().size(); ++i) f.pixels()[i] = static_cast<double>((i * 37) % 256) / 255.0;
  f.valid(2, 3) = 0;
  write_png(dir / "a.png", f);
  const Frame g = read_png(dir / "a.png");
  ASSERT_TRUE(g.same_size(f));
  ASSERT_EQ(g.channels(), 3);
  for (std::size_t i = 0; i < f.pixels().size(); ++i) EXPECT_EQ(g.pixels()[i], f.pixels()[i]);
  EXPECT_EQ(g.valid(2, 3), 0);
  EXPECT_EQ(g.valid(0, 0), 1);

  Frame gray(3, 4, 1, 0.5);
  write_png(dir / "g.png", gray);
  const Frame h = read_png(dir / "g.png");
  EXPECT_EQ(h.channels(), 1);
  EXPECT_NEAR(h(1, 1), 0.5, 0.5 / 255);
}

TEST(Io, FrameDirectories) {
  const fs::path dir = scratch_dir("frames");
  EXPECT_EQ(frame_name(42), "000042.png");
  const std::vector<Frame> frames{Frame(4, 4, 1, 0.1), Frame(4, 4, 1, 0.2), Frame(4, 4, 1, 0.3)};
  write_frames(dir, frames);
  std::ofstream(dir / "notes.txt") << "ignored";
  EXPECT_EQ(read_frames(dir).size(), 3u);
  fs::remove(dir / frame_name(1));
  try {
    list_frames(dir);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("000001.png"), std::string::npos);
  }
  try {
    list_frames(dir / "missing");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
  EXPECT_THROW(read_png(dir / "notes.txt"), InvalidArgument);
}

TEST(Io, MeshCsvRoundTrip) {
  const std::vector<ControlGrid> meshes{testing::jittered_mesh({2, 3}, 100, 80, 3.0, 1),
                                        testing::jittered_mesh({2, 3}, 100, 80, 3.0, 2)};
  std::stringstream s;
  write_meshes_csv(s, meshes);
  const auto back = read_meshes_csv(s);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < meshes[t].size(); ++i) EXPECT_EQ(back[t][i], meshes[t][i]);
}

TEST(Io, MetadataCsvHasOneRowPerFrame) {
  std::vector<StitchedFrame> frames(2);
  frames[1].t = 1;
  frames[1].warmup = true;
  frames[1].timings.total = 12.5;
  std::ostringstream out;
  write_metadata_csv(out, frames);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[1].substr(0, 20), "t,warmup,degraded,sp");
  EXPECT_EQ(lines[3], "1,1,0,0,0,0,0,0,0,0,0,0,12.5");
}

std::vector<std::string> polylines(const std::string& svg) {
  std::vector<std::string> out;
  for (std::size_t at = svg.find("points=\""); at != std::string::npos; at = svg.find("points=\"", at + 1)) {
    const std::size_t b = at + 8;
    out.push_back(svg.substr(b, svg.find('"', b) - b));
  }
  return out;
}

TEST(Plot, ZeroTrajectoryIsFlat) {
  Trajectory zero(GridShape{2, 2});
  for (int t = 0; t < 5; ++t) zero.push_back(MotionField(GridShape{2, 2}));
  const std::string svg = control_point_svg(zero, nullptr, 1, 1);
  const auto lines = polylines(svg);
  ASSERT_EQ(lines.size(), 2u);
  for (const auto& line : lines) {
    std::istringstream pts(line);
    std::string p;
    std::set<std::string> ys;
    while (pts >> p) ys.insert(p.substr(p.find(',') + 1));
    EXPECT_EQ(ys.size(), 1u);
  }
}

TEST(Plot, SmoothedOverlayAndExtent) {
  const GridShape g{1, 1};
  Trajectory raw(g), sm(g);
  for (int t = 0; t < 6; ++t) {
    raw.push_back(MotionField(g, Point(t % 2 ? 4.0 : -3.0, 0.5 * t)));
    sm.push_back(MotionField(g, Point(0.2 * t, 0.5 * t)));
  }
  const std::string svg = control_point_svg(raw, &sm, 0, 1);
  EXPECT_EQ(polylines(svg).size(), 4u);
  EXPECT_NE(svg.find("data-label=\"smoothed\""), std::string::npos);
  const std::vector<Series> s{{"a", {-3, 4, 1}}, {"b", {0, 1.5}}};
  const AxisRange r = value_range(s);
  EXPECT_LE(r.lo, -3.0);
  EXPECT_GE(r.hi, 4.0);
  EXPECT_NEAR(r.hi - r.lo, 7.0 * 1.1, 1e-12);
  EXPECT_THROW(control_point_svg(raw, &sm, 2, 0), InvalidArgument);
}

}  // namespace
}  // namespace vstitch
