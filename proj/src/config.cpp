#include "vstitch/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

namespace pt = boost::property_tree;

// One binder per config field keeps reading and writing in step.
class Binder {
 public:
  Binder(pt::ptree* in, std::ostream* out) : in_(in), out_(out) {}

  void section(const std::string& name) {
    section_ = name;
    if (out_) *out_ << (first_ ? "" : "\n") << '[' << name << "]\n";
    first_ = false;
    if (in_) {
      if (auto child = in_->get_child_optional(name)) {
        for (const auto& kv : *child) unclaimed_.insert(name + "." + kv.first);
      }
      sections_.insert(name);
    }
  }

  template <class T>
  void field(const std::string& key, T& value) {
    const std::string path = section_ + "." + key;
    if (out_) *out_ << key << " = " << format(value) << '\n';
    if (!in_) return;
    unclaimed_.erase(path);
    const auto text = in_->get_optional<std::string>(pt::ptree::path_type(path, '.'));
    if (!text) return;
    try {
      parse(*text, value);
    } catch (const std::exception&) {
      throw InvalidArgument("config: bad value for " + path + ": '" + *text + "'");
    }
  }

  void finish() const {
    if (!in_) return;
    for (const auto& kv : *in_) {
      if (!sections_.count(kv.first)) throw InvalidArgument("config: unknown section [" + kv.first + "]");
    }
    if (!unclaimed_.empty()) throw InvalidArgument("config: unknown key " + *unclaimed_.begin());
  }

 private:
  // Shortest text that reads back to the same double.
  static std::string format(double v) { return fmt::format("{}", v); }
  static std::string format(int v) { return std::to_string(v); }
  static std::string format(bool v) { return v ? "true" : "false"; }
  static std::string format(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format(v[i]);
    return s;
  }
  static std::string format(TextureKind k) { return k == TextureKind::noise ? "noise" : "checker_blobs"; }
  static std::string format(kernels::Exec e) { return e == kernels::Exec::serial ? "serial" : "parallel"; }

  static std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  static void parse(const std::string& s, double& v) {
    std::size_t used = 0;
    v = std::stod(s, &used);
    if (trimmed(s.substr(used)).size()) throw std::invalid_argument("trailing text");
  }
  static void parse(const std::string& s, int& v) {
    std::size_t used = 0;
    v = std::stoi(s, &used);
    if (trimmed(s.substr(used)).size()) throw std::invalid_argument("trailing text");
  }
  static void parse(const std::string& s, bool& v) {
    const std::string t = trimmed(s);
    if (t == "true" || t == "1") {
      v = true;
    } else if (t == "false" || t == "0") {
      v = false;
    } else {
      throw std::invalid_argument("not a bool");
    }
  }
  static void parse(const std::string& s, std::vector<double>& v) {
    v.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double x = 0.0;
      parse(item, x);
      v.push_back(x);
    }
  }
  static void parse(const std::string& s, TextureKind& k) {
    const std::string t = trimmed(s);
    if (t == "noise") {
      k = TextureKind::noise;
    } else if (t == "checker_blobs") {
      k = TextureKind::checker_blobs;
    } else {
      throw std::invalid_argument("texture");
    }
  }
  static void parse(const std::string& s, kernels::Exec& e) {
    const std::string t = trimmed(s);
    if (t == "serial") {
      e = kernels::Exec::serial;
    } else if (t == "parallel") {
      e = kernels::Exec::parallel;
    } else {
      throw std::invalid_argument("exec");
    }
  }

  pt::ptree* in_;
  std::ostream* out_;
  std::string section_;
  bool first_ = true;
  std::set<std::string> sections_;
  std::set<std::string> unclaimed_;
};

void bind_motion(Binder& b, const std::string& name, StreamMotion& m) {
  b.section(name);
  b.field("keyframes", m.keyframes);
  b.field("path_amplitude", m.path_amplitude);
  b.field("velocity_x", m.velocity.x());
  b.field("velocity_y", m.velocity.y());
  b.field("shake_amplitude", m.shake_amplitude);
  b.field("shake_frequency", m.shake_frequency);
  b.field("max_rotation_deg", m.max_rotation_deg);
  b.field("max_scale_delta", m.max_scale_delta);
}

void bind(Binder& b, AppConfig& c) {
  b.section("grid");
  b.field("rows", c.grid.rows_u);
  b.field("cols", c.grid.cols_v);

  b.section("warp");
  b.field("lambda_tmp", c.warp.lambda_tmp);
  b.field("lambda_spt", c.warp.lambda_spt);
  b.field("mu_spt", c.warp.mu_spt);
  b.field("omega_spt", c.warp.omega_spt);
  b.field("omega_h", c.warp.omega_h);

  EstimatorOptions& e = c.estimator;
  b.section("estimator");
  b.field("pyramid_levels", e.pyramid_levels);
  b.field("search_level", e.search_level);
  b.field("search_peaks", e.search_peaks);
  b.field("homography_min_level", e.homography_min_level);
  b.field("homography_iters", e.homography_iters);
  b.field("fine_level", e.fine_level);
  b.field("fine_stride", e.fine_stride);
  b.field("max_iters", e.max_iters);
  b.field("rel_tol", e.rel_tol);
  b.field("min_overlap", e.min_overlap);
  b.field("exec", e.exec);

  SmoothingConfig& s = c.pipeline.smoothing;
  b.section("smoothing");
  b.field("window", s.window);
  b.field("weight_data", s.weight_data);
  b.field("weight_smooth", s.weight_smooth);
  b.field("weight_space", s.weight_space);
  b.field("weight_online", s.weight_online);
  b.field("alpha", s.alpha);
  b.field("betas", s.betas);
  b.field("max_iters", s.max_iters);
  b.field("tolerance", s.tolerance);
  b.field("squared_norms", s.squared_norms);

  PipelineConfig& p = c.pipeline;
  b.section("pipeline");
  b.field("smooth", p.smooth);
  b.field("canvas_padding", p.canvas_padding);
  b.field("render_node_step", p.render_node_step);
  b.field("exec", p.exec);

  SceneSpec& sc = c.scene;
  b.section("scene");
  b.field("frame_height", sc.frame_height);
  b.field("frame_width", sc.frame_width);
  b.field("channels", sc.channels);
  b.field("frames", sc.frames);
  b.field("texture", sc.texture);
  b.field("overlap", sc.overlap);
  b.field("margin", sc.margin);
  b.field("integer_positions", sc.integer_positions);
  bind_motion(b, "scene_rig", sc.rig);
  bind_motion(b, "scene_ref", sc.ref);
  bind_motion(b, "scene_tgt", sc.tgt);
}

}  // namespace

void AppConfig::validate() const {
  grid.validate();
  warp.validate();
  estimator.validate();
  pipeline.validate();
  scene.validate();
}

AppConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  AppConfig cfg;
  Binder b(&tree, nullptr);
  bind(b, cfg);
  b.finish();
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const AppConfig& cfg) {
  AppConfig copy = cfg;
  Binder b(nullptr, &out);
  bind(b, copy);
}

}  // namespace vstitch
