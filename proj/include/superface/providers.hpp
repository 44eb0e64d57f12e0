#ifndef SUPERFACE_PROVIDERS_HPP
#define SUPERFACE_PROVIDERS_HPP

// Prior providers: anything that can turn an image into the dual mesh /
// landmark representation. Real third-party detectors are deliberately not a
// dependency; the repo ships
//   - SyntheticStripProvider: exact, reads the toy generator's parameter strip
//   - PrecomputedPriorProvider: import path for landmark sidecar files,
//     keyed by image content hash
//   - ToyFittingProvider: least-squares model fit, works on generated frames
// Providers are pure given their construction state; use one instance per
// worker when running in parallel.

#include <memory>
#include <unordered_map>

#include "superface/toyface.hpp"

namespace sf {

struct NoFaceDetected : std::runtime_error {
  explicit NoFaceDetected(const std::string& m) : std::runtime_error("NoFaceDetected: " + m) {}
};

inline double pixel_variance(const Image& im) {
  double m = 0;
  for (int64_t i = 0; i < im.size(); ++i) m += im[i];
  m /= static_cast<double>(im.size());
  double v = 0;
  for (int64_t i = 0; i < im.size(); ++i) {
    double d = im[i] - m;
    v += d * d;
  }
  return v / static_cast<double>(im.size());
}

inline constexpr double kBlankVarianceThreshold = 1e-4;

class PriorProvider {
 public:
  virtual ~PriorProvider() = default;
  virtual std::string id() const = 0;
  // throws NoFaceDetected when the frame carries no detectable face
  virtual std::pair<MeshImage, LandmarkSet3D> detect(const Image& image) const = 0;
};

// single detection pass producing both representations
inline std::pair<MeshImage, LandmarkSet3D> detect_priors(const Image& image, const PriorProvider& provider) {
  for (int64_t i = 0; i < image.size(); ++i)
    if (!(image[i] >= 0.f && image[i] <= 1.f)) throw std::runtime_error("detect_priors: image not in [0,1]");
  return provider.detect(image);
}

class SyntheticStripProvider : public PriorProvider {
 public:
  explicit SyntheticStripProvider(ToyIdentity identity) : identity_(identity) {}

  std::string id() const override { return "synthetic-strip"; }

  std::pair<MeshImage, LandmarkSet3D> detect(const Image& image) const override {
    if (pixel_variance(image) < kBlankVarianceThreshold) throw NoFaceDetected("blank frame (variance threshold)");
    ToyFaceParams p;
    if (!read_param_strip(image, p)) throw NoFaceDetected("no parameter strip");
    LandmarkSet3D lm = toyface_landmarks(identity_, p);
    MeshImage mesh = rasterize_mesh(lm, synthetic68_edges(), img_h(image), img_w(image));
    return {std::move(mesh), std::move(lm)};
  }

 private:
  ToyIdentity identity_;
};

// Landmarks imported from sidecar files; lookup is by content hash so the
// provider keeps the image-only detect() signature.
class PrecomputedPriorProvider : public PriorProvider {
 public:
  std::string id() const override { return "precomputed-file"; }

  void register_frame(const Image& frame, LandmarkSet3D lm) { table_[tensor_hash(frame)] = std::move(lm); }

  // frames dir must contain %06d.png files; sidecar maps frame index -> landmarks
  void register_clip(const std::filesystem::path& frames_dir, const std::filesystem::path& landmark_file);

  std::pair<MeshImage, LandmarkSet3D> detect(const Image& image) const override {
    if (pixel_variance(image) < kBlankVarianceThreshold) throw NoFaceDetected("blank frame (variance threshold)");
    auto it = table_.find(tensor_hash(image));
    if (it == table_.end()) throw NoFaceDetected("frame not present in the imported landmark table");
    const LandmarkSet3D& lm = it->second;
    MeshImage mesh = rasterize_mesh(lm, synthetic68_edges(), img_h(image), img_w(image));
    return {std::move(mesh), lm};
  }

  size_t size() const { return table_.size(); }

 private:
  std::unordered_map<uint64_t, LandmarkSet3D> table_;
};

inline void PrecomputedPriorProvider::register_clip(const std::filesystem::path& frames_dir,
                                                    const std::filesystem::path& landmark_file) {
  auto records = load_landmark_file(landmark_file);
  for (const auto& [frame, lm] : records) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.png", static_cast<long long>(frame));
    auto fp = frames_dir / name;
    if (!std::filesystem::exists(fp)) continue;
    register_frame(load_png(fp), lm);
  }
}

// Least-squares fit of the parametric face; the detector used on generated
// frames (no strip, no sidecar). Confidence reflects the fit residual.
class ToyFittingProvider : public PriorProvider {
 public:
  explicit ToyFittingProvider(ToyIdentity identity, double residual_threshold = 0.02, int nm_iters = 260)
      : identity_(identity), residual_threshold_(residual_threshold), nm_iters_(nm_iters) {}

  std::string id() const override { return "toy-fitting"; }

  std::pair<MeshImage, LandmarkSet3D> detect(const Image& image) const override {
    if (pixel_variance(image) < kBlankVarianceThreshold) throw NoFaceDetected("blank frame (variance threshold)");
    ToyFitResult fit = fit_toyface(image, identity_, nm_iters_);
    if (fit.residual > residual_threshold_)
      throw NoFaceDetected("fit residual " + std::to_string(fit.residual) + " above threshold");
    LandmarkSet3D lm = toyface_landmarks(identity_, fit.params);
    lm.confidence = static_cast<float>(1.0 - fit.residual / residual_threshold_);
    MeshImage mesh = rasterize_mesh(lm, synthetic68_edges(), img_h(image), img_w(image));
    return {std::move(mesh), std::move(lm)};
  }

  const ToyIdentity& identity() const { return identity_; }

 private:
  ToyIdentity identity_;
  double residual_threshold_;
  int nm_iters_;
};

}  // namespace sf

#endif
