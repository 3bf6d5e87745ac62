#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhac/common.hpp"

namespace nhac {

enum class FrameKind { kEasy, kHard, kNoise, kUnknown };

std::string to_string(FrameKind kind);
FrameKind frame_kind_from_string(const std::string& name);

struct FrameRecord {
  Vector feature;
  FrameKind kind = FrameKind::kUnknown;
};

/// Ordered frames of one tracked person from one camera.
struct Tracklet {
  long id = 0;
  long identity = -1;  // -1 when ground truth is absent
  int camera = -1;
  std::vector<FrameRecord> frames;

  int length() const { return static_cast<int>(frames.size()); }
};

struct Dataset {
  int dim = 0;
  bool has_identity = false;
  bool has_camera = false;
  bool has_kind = false;
  std::vector<Tracklet> tracklets;

  int tracklet_count() const { return static_cast<int>(tracklets.size()); }
  std::size_t frame_count() const;
  // Uniform feature dimension and non-empty tracklets.
  void validate() const;
};

/// Recipe for a labeled benchmark: identity prototypes on the unit sphere,
/// easy/hard frames as small/large angular perturbations, and noise frames
/// that either mimic another identity or point in a uniformly random
/// direction.
struct SyntheticSpec {
  int n_identities = 10;
  int n_cameras = 2;
  int tracklets_per_identity_per_camera = 2;
  int frames_min = 16;
  int frames_max = 32;
  int input_dim = 16;
  double easy_sigma = 0.15;
  double hard_sigma = 0.25;
  // Fixed per-camera appearance offset; cross-camera retrieval and merging
  // stay non-trivial only when this is positive.
  double camera_shift = 0.5;
  // Prototypes sample from a cone around a hub direction. Smaller spread
  // packs identities closer together, so noise frames resembling another
  // identity can actually flip a merge decision.
  double prototype_spread = 0.9;
  double hard_fraction = 0.3;
  double noise_fraction = 0.1;
  enum class NoiseMode { kOtherIdentity, kUniformRandom };
  NoiseMode noise_mode = NoiseMode::kOtherIdentity;
  double min_prototype_angle_deg = 30.0;
  std::uint64_t seed = 1;

  void validate() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

// Per-tracklet kind counts are fixed by rounding (not Bernoulli draws), so
// evaluation denominators are exact; the kind sequence is shuffled in time.
Dataset generate(const SyntheticSpec& spec, Rng& rng);
Dataset generate(const SyntheticSpec& spec);  // seeds an rng from spec.seed

// Line-delimited text, one frame per line, bitwise round-trip.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Tracklet indices of the retrieval protocol: camera 1 probes against the
/// remaining cameras' gallery.
struct QueryGallerySplit {
  std::vector<int> query;
  std::vector<int> gallery;
};

// Identities seen only in camera 1 are excluded from the query side with a
// warning, so every query has at least one gallery match.
QueryGallerySplit split_query_gallery(const Dataset& dataset);

}  // namespace nhac
