#ifndef SUPERFACE_LANDMARKS_HPP
#define SUPERFACE_LANDMARKS_HPP

// 3D facial landmarks and the synthetic 68-point topology. Coordinates are
// normalized to [-1,1] with the origin at the image center, y down, z toward
// the viewer; align-corners mapping to pixels.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "superface/tensor.hpp"

namespace sf {

struct UnknownRegion : std::runtime_error {
  explicit UnknownRegion(const std::string& m) : std::runtime_error("UnknownRegion: " + m) {}
};

struct LandmarkSet3D {
  Tensor<float> points;  // (L,3)
  std::string topology_id = "synthetic68";
  float confidence = 1.f;

  int64_t count() const { return points.size() ? points.shape()[0] : 0; }

  void validate() const {
    for (int64_t i = 0; i < points.size(); ++i) {
      float v = points[i];
      if (!std::isfinite(v) || v < -1.5f || v > 1.5f)
        throw std::runtime_error("landmark coordinate out of [-1.5,1.5]: " + std::to_string(v));
    }
  }
};

enum class Region { kMouth, kEyes, kCustom };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::kMouth: return "mouth";
    case Region::kEyes: return "eyes";
    default: return "custom";
  }
}

inline Region region_from_string(const std::string& s) {
  if (s == "mouth") return Region::kMouth;
  if (s == "eyes") return Region::kEyes;
  if (s == "custom") return Region::kCustom;
  throw UnknownRegion(s);
}

struct LocalSignal {
  Region region = Region::kCustom;
  std::vector<int> indices;  // source rows, stable order
  Tensor<float> landmarks;   // (n,3)
  int64_t frame_index = 0;
};

// ---- synthetic 68-point topology ----
// 0-16 jaw, 17-21 right brow, 22-26 left brow, 27-30 nose bridge,
// 31-35 nose base, 36-41 right eye, 42-47 left eye, 48-59 outer lip,
// 60-67 inner lip ("right" = viewer's left).

inline constexpr int kSynthetic68 = 68;

inline const std::vector<int>& mouth_indices() {
  static const std::vector<int> v = [] {
    std::vector<int> r;
    for (int i = 48; i <= 67; ++i) r.push_back(i);
    return r;
  }();
  return v;
}

inline const std::vector<int>& eyes_indices() {
  static const std::vector<int> v = [] {
    std::vector<int> r;
    for (int i = 36; i <= 47; ++i) r.push_back(i);
    return r;
  }();
  return v;
}

using EdgeTable = std::vector<std::pair<int, int>>;

inline const EdgeTable& synthetic68_edges() {
  static const EdgeTable t = [] {
    EdgeTable e;
    auto chain = [&](int a, int b) {
      for (int i = a; i < b; ++i) e.push_back({i, i + 1});
    };
    auto loop = [&](int a, int b) {
      chain(a, b);
      e.push_back({b, a});
    };
    chain(0, 16);    // jaw
    chain(17, 21);   // right brow
    chain(22, 26);   // left brow
    chain(27, 30);   // nose bridge
    chain(31, 35);   // nose base
    loop(36, 41);    // right eye
    loop(42, 47);    // left eye
    loop(48, 59);    // outer lip
    loop(60, 67);    // inner lip
    return e;
  }();
  return t;
}

// ---- operations ----

// keep (x, y), discard z
template <class T>
Tensor<T> project_orthographic(const Tensor<T>& p3d) {
  if (p3d.size() == 0) return Tensor<T>({0, 2});
  int64_t k = p3d.shape()[0];
  Tensor<T> out({k, 2});
  for (int64_t i = 0; i < k; ++i) {
    out[i * 2 + 0] = p3d[i * 3 + 0];
    out[i * 2 + 1] = p3d[i * 3 + 1];
  }
  return out;
}

inline LocalSignal extract_local(const LandmarkSet3D& lm, Region region, const std::vector<int>& custom = {},
                                 int64_t frame_index = 0) {
  LocalSignal sig;
  sig.region = region;
  sig.frame_index = frame_index;
  switch (region) {
    case Region::kMouth: sig.indices = mouth_indices(); break;
    case Region::kEyes: sig.indices = eyes_indices(); break;
    case Region::kCustom:
      if (custom.empty()) throw UnknownRegion("custom region needs an explicit index list");
      sig.indices = custom;
      break;
  }
  for (int i : sig.indices)
    if (i < 0 || i >= lm.count()) throw UnknownRegion("region index " + std::to_string(i) + " out of topology");
  sig.landmarks = Tensor<float>({static_cast<int64_t>(sig.indices.size()), 3});
  for (size_t r = 0; r < sig.indices.size(); ++r)
    for (int64_t c = 0; c < 3; ++c) sig.landmarks[static_cast<int64_t>(r) * 3 + c] = lm.points[sig.indices[r] * 3 + c];
  return sig;
}

// ---- landmark sidecar files ----
// one record per frame: `frame_id L x0 y0 z0 x1 y1 z1 ...`

inline void save_landmark_file(const std::filesystem::path& path, const std::map<int64_t, LandmarkSet3D>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(9);
  for (const auto& [frame, lm] : records) {
    out << frame << " " << lm.count();
    for (int64_t i = 0; i < lm.points.size(); ++i) out << " " << lm.points[i];
    out << "\n";
  }
}

inline std::map<int64_t, LandmarkSet3D> load_landmark_file(const std::filesystem::path& path,
                                                           const std::string& topology_id = "synthetic68") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::map<int64_t, LandmarkSet3D> records;
  int64_t frame;
  while (in >> frame) {
    int64_t L;
    if (!(in >> L)) throw std::runtime_error("truncated landmark record in " + path.string());
    LandmarkSet3D lm;
    lm.topology_id = topology_id;
    lm.points = Tensor<float>({L, 3});
    for (int64_t i = 0; i < L * 3; ++i)
      if (!(in >> lm.points[i])) throw std::runtime_error("truncated landmark record in " + path.string());
    records[frame] = std::move(lm);
  }
  return records;
}

inline void save_edge_table(const std::filesystem::path& path, const EdgeTable& edges) {
  std::ofstream out(path);
  for (auto [i, j] : edges) out << i << " " << j << "\n";
}

inline EdgeTable load_edge_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EdgeTable t;
  int i, j;
  while (in >> i >> j) t.push_back({i, j});
  return t;
}

}  // namespace sf

#endif
