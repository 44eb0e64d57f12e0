#ifndef SUPERFACE_MESH_RASTER_HPP
#define SUPERFACE_MESH_RASTER_HPP

// The 2D half of the dual mesh representation: face-mesh edges drawn as
// anti-aliased strokes over a black background. Only (x,y) of each landmark
// is used; z rides along in the landmark array.

#include "superface/image.hpp"
#include "superface/landmarks.hpp"

namespace sf {

struct MeshImage {
  Image raster;  // (3,H,W) in [0,1]
  int64_t source_frame_id = -1;
};

inline double norm_to_px(float v, int64_t size) { return (static_cast<double>(v) + 1.0) * 0.5 * (size - 1); }
inline float px_to_norm(double p, int64_t size) { return static_cast<float>(p / (size - 1) * 2.0 - 1.0); }

// An empty edge table is valid and yields an all-zero raster.
inline MeshImage rasterize_mesh(const LandmarkSet3D& landmarks, const EdgeTable& edges, int64_t H, int64_t W,
                                int64_t source_frame_id = -1) {
  MeshImage m;
  m.raster = make_image(H, W);
  m.source_frame_id = source_frame_id;
  int64_t L = landmarks.count();
  float* plane = m.raster.data();  // draw into channel 0, replicate after
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= L || j >= L)
      throw ShapeMismatch("edge (" + std::to_string(i) + "," + std::to_string(j) + ") exceeds L=" + std::to_string(L));
    draw_line_aa(plane, H, W, norm_to_px(landmarks.points[i * 3 + 0], W), norm_to_px(landmarks.points[i * 3 + 1], H),
                 norm_to_px(landmarks.points[j * 3 + 0], W), norm_to_px(landmarks.points[j * 3 + 1], H));
  }
  std::copy(plane, plane + H * W, m.raster.data() + H * W);
  std::copy(plane, plane + H * W, m.raster.data() + 2 * H * W);
  return m;
}

}  // namespace sf

#endif
