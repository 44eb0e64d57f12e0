#ifndef SUPERFACE_FLOPS_HPP
#define SUPERFACE_FLOPS_HPP

// Analytic multiply-accumulate counting. Models enumerate themselves into a
// NetSpec (one entry per parameterized layer); the counter never executes
// anything. FLOPs are reported as 2x MACs when printed.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sf {

struct UnsupportedLayer : std::runtime_error {
  explicit UnsupportedLayer(const std::string& m) : std::runtime_error("UnsupportedLayer: " + m) {}
};

struct LayerDesc {
  std::string name;
  std::string kind;  // conv2d | conv3d | linear
  int64_t cin = 0, cout = 0;
  int64_t kd = 1, kh = 1, kw = 1;  // kernel extents (kd unused for conv2d)
  int64_t od = 1, oh = 1, ow = 1;  // output spatial extents
};

using NetSpec = std::vector<LayerDesc>;

inline int64_t layer_macs(const LayerDesc& l) {
  if (l.kind == "conv2d") return l.cout * l.oh * l.ow * l.cin * l.kh * l.kw;
  if (l.kind == "conv3d") return l.cout * l.od * l.oh * l.ow * l.cin * l.kd * l.kh * l.kw;
  if (l.kind == "linear") return l.cin * l.cout;
  throw UnsupportedLayer(l.kind + " (" + l.name + ")");
}

inline int64_t count_macs(const NetSpec& spec) {
  int64_t total = 0;
  for (const auto& l : spec) total += layer_macs(l);
  return total;
}

inline double macs_to_gflops(int64_t macs) { return 2.0 * static_cast<double>(macs) / 1e9; }

}  // namespace sf

#endif
