#include "nhac/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nhac {

std::string to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::kEasy: return "easy";
    case FrameKind::kHard: return "hard";
    case FrameKind::kNoise: return "noise";
    case FrameKind::kUnknown: return "-";
  }
  return "-";
}

FrameKind frame_kind_from_string(const std::string& name) {
  if (name == "easy") return FrameKind::kEasy;
  if (name == "hard") return FrameKind::kHard;
  if (name == "noise") return FrameKind::kNoise;
  if (name == "-") return FrameKind::kUnknown;
  throw InvalidInput("unknown frame kind '" + name + "'");
}

std::size_t Dataset::frame_count() const {
  std::size_t n = 0;
  for (const Tracklet& t : tracklets) {
    n += t.frames.size();
  }
  return n;
}

void Dataset::validate() const {
  for (const Tracklet& t : tracklets) {
    if (t.frames.empty()) {
      throw InvalidInput("tracklet " + std::to_string(t.id) + " has no frames");
    }
    for (const FrameRecord& f : t.frames) {
      if (f.feature.size() != dim) {
        throw InvalidInput("tracklet " + std::to_string(t.id) +
                           " carries a frame of dimension " +
                           std::to_string(f.feature.size()) + ", expected " +
                           std::to_string(dim));
      }
    }
  }
}

void SyntheticSpec::validate() const {
  if (n_identities < 1) throw ConfigError("n_identities must be at least 1");
  if (n_cameras < 1) throw ConfigError("n_cameras must be at least 1");
  if (tracklets_per_identity_per_camera < 1) {
    throw ConfigError("tracklets_per_identity_per_camera must be at least 1");
  }
  if (frames_min < 1 || frames_max < frames_min) {
    throw ConfigError("frame count range is empty or non-positive");
  }
  if (input_dim < 1) throw ConfigError("input_dim must be at least 1");
  if (!(easy_sigma >= 0.0) || !(hard_sigma >= 0.0)) {
    throw ConfigError("perturbation sigmas must be non-negative");
  }
  if (hard_sigma < easy_sigma) {
    throw ConfigError("hard_sigma must be at least easy_sigma");
  }
  if (camera_shift < 0.0) {
    throw ConfigError("camera_shift must be non-negative");
  }
  if (!(prototype_spread > 0.0)) {
    throw ConfigError("prototype_spread must be positive");
  }
  if (hard_fraction < 0.0 || hard_fraction >= 1.0 || noise_fraction < 0.0 ||
      noise_fraction >= 1.0 || hard_fraction + noise_fraction >= 1.0) {
    throw ConfigError("hard_fraction + noise_fraction must stay below 1");
  }
  if (min_prototype_angle_deg < 0.0 || min_prototype_angle_deg >= 180.0) {
    throw ConfigError("min_prototype_angle_deg must lie in [0, 180)");
  }
  if (noise_mode == NoiseMode::kOtherIdentity && noise_fraction > 0.0 &&
      n_identities < 2) {
    throw ConfigError("other_identity noise needs at least two identities");
  }
}

namespace {

const char* to_string(SyntheticSpec::NoiseMode mode) {
  return mode == SyntheticSpec::NoiseMode::kOtherIdentity ? "other_identity"
                                                          : "uniform_random";
}

SyntheticSpec::NoiseMode noise_mode_from_string(const std::string& name) {
  if (name == "other_identity") return SyntheticSpec::NoiseMode::kOtherIdentity;
  if (name == "uniform_random") return SyntheticSpec::NoiseMode::kUniformRandom;
  throw ConfigError("unknown noise_mode '" + name + "'");
}

Vector gaussian_vector(int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    v[i] = gauss(rng);
  }
  return v;
}

std::vector<Vector> draw_prototypes(const SyntheticSpec& spec, Rng& rng) {
  // Cone sampling around a hub controls how crowded the identities are;
  // rejection keeps every pairwise angle at or above the minimum.
  const double max_cos =
      std::cos(spec.min_prototype_angle_deg * M_PI / 180.0);
  const Vector hub = normalize_or_basis(gaussian_vector(spec.input_dim, rng));
  std::vector<Vector> protos;
  protos.reserve(spec.n_identities);
  const int attempt_cap = 10000;
  for (int id = 0; id < spec.n_identities; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < attempt_cap; ++attempt) {
      Vector candidate = normalize_or_basis(
          hub + spec.prototype_spread * gaussian_vector(spec.input_dim, rng));
      bool ok = true;
      for (const Vector& p : protos) {
        if (candidate.dot(p) > max_cos) {
          ok = false;
          break;
        }
      }
      if (ok) {
        protos.push_back(std::move(candidate));
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw ConfigError(
          "could not place " + std::to_string(spec.n_identities) +
          " prototypes with the requested separation in dimension " +
          std::to_string(spec.input_dim));
    }
  }
  return protos;
}

Vector perturbed(const Vector& base, double sigma, int dim, Rng& rng) {
  if (sigma == 0.0) {
    return normalize_or_basis(base);
  }
  return normalize_or_basis(base + sigma * gaussian_vector(dim, rng));
}

}  // namespace

Dataset generate(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  const std::vector<Vector> protos = draw_prototypes(spec, rng);
  std::vector<Vector> camera_offsets;
  camera_offsets.reserve(spec.n_cameras);
  for (int cam = 0; cam < spec.n_cameras; ++cam) {
    camera_offsets.push_back(
        spec.camera_shift *
        normalize_or_basis(gaussian_vector(spec.input_dim, rng)));
  }

  Dataset data;
  data.dim = spec.input_dim;
  data.has_identity = true;
  data.has_camera = true;
  data.has_kind = true;

  std::uniform_int_distribution<int> frame_count(spec.frames_min,
                                                 spec.frames_max);
  long next_id = 1;
  for (int identity = 1; identity <= spec.n_identities; ++identity) {
    for (int camera = 1; camera <= spec.n_cameras; ++camera) {
      for (int k = 0; k < spec.tracklets_per_identity_per_camera; ++k) {
        const int length = frame_count(rng);
        int noise = static_cast<int>(std::lround(length * spec.noise_fraction));
        int hard = static_cast<int>(std::lround(length * spec.hard_fraction));
        if (noise + hard > length) {
          hard = length - noise;
        }
        const int easy = length - noise - hard;

        std::vector<FrameKind> kinds;
        kinds.reserve(length);
        kinds.insert(kinds.end(), easy, FrameKind::kEasy);
        kinds.insert(kinds.end(), hard, FrameKind::kHard);
        kinds.insert(kinds.end(), noise, FrameKind::kNoise);
        std::shuffle(kinds.begin(), kinds.end(), rng);

        // A detector that drifts drifts onto one wrong person, so all of a
        // tracklet's noise frames share a single distractor identity.
        int distractor = -1;
        if (noise > 0 &&
            spec.noise_mode == SyntheticSpec::NoiseMode::kOtherIdentity) {
          std::uniform_int_distribution<int> pick(0, spec.n_identities - 2);
          distractor = pick(rng);
          if (distractor >= identity - 1) {
            ++distractor;
          }
        }

        Tracklet t;
        t.id = next_id++;
        t.identity = identity;
        t.camera = camera;
        t.frames.reserve(length);
        const Vector own_base =
            protos[identity - 1] + camera_offsets[camera - 1];
        for (FrameKind kind : kinds) {
          FrameRecord frame;
          frame.kind = kind;
          switch (kind) {
            case FrameKind::kEasy:
              frame.feature = perturbed(own_base, spec.easy_sigma, data.dim, rng);
              break;
            case FrameKind::kHard:
              frame.feature = perturbed(own_base, spec.hard_sigma, data.dim, rng);
              break;
            case FrameKind::kNoise: {
              if (spec.noise_mode == SyntheticSpec::NoiseMode::kOtherIdentity) {
                frame.feature =
                    perturbed(protos[distractor] + camera_offsets[camera - 1],
                              spec.easy_sigma, data.dim, rng);
              } else {
                frame.feature =
                    normalize_or_basis(gaussian_vector(data.dim, rng));
              }
              break;
            }
            case FrameKind::kUnknown:
              break;
          }
          t.frames.push_back(std::move(frame));
        }
        data.tracklets.push_back(std::move(t));
      }
    }
  }
  return data;
}

Dataset generate(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  return generate(spec, rng);
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidInput("cannot open dataset file for writing: " + path);
  }
  out << "#nhac-dataset v1 dim=" << dataset.dim << " fields=tracklet";
  if (dataset.has_identity) out << ",identity";
  if (dataset.has_camera) out << ",camera";
  if (dataset.has_kind) out << ",kind";
  out << ",feature\n";
  for (const Tracklet& t : dataset.tracklets) {
    for (const FrameRecord& f : t.frames) {
      out << t.id << '\t';
      if (dataset.has_identity && t.identity >= 0) {
        out << t.identity;
      } else {
        out << '-';
      }
      out << '\t';
      if (dataset.has_camera && t.camera >= 0) {
        out << t.camera;
      } else {
        out << '-';
      }
      out << '\t';
      out << (dataset.has_kind ? to_string(f.kind) : std::string("-"));
      for (Eigen::Index i = 0; i < f.feature.size(); ++i) {
        out << '\t' << format_double(f.feature[i]);
      }
      out << '\n';
    }
  }
  if (!out) {
    throw InvalidInput("failed while writing dataset file: " + path);
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

long parse_long(const std::string& text, int line_no, const char* what) {
  try {
    std::size_t used = 0;
    const long value = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw InvalidInput("dataset line " + std::to_string(line_no) + ": bad " +
                       what + " '" + text + "'");
  }
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidInput("cannot open dataset file: " + path);
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw InvalidInput("dataset file is empty: " + path);
  }
  int dim = 0;
  char fields_buf[256] = {0};
  if (std::sscanf(header.c_str(), "#nhac-dataset v1 dim=%d fields=%255s", &dim,
                  fields_buf) != 2 ||
      dim < 1) {
    throw InvalidInput("dataset file: unrecognized header '" + header + "'");
  }
  Dataset data;
  data.dim = dim;
  {
    std::string fields(fields_buf);
    std::stringstream ss(fields);
    std::string field;
    bool has_tracklet = false, has_feature = false;
    while (std::getline(ss, field, ',')) {
      if (field == "tracklet") has_tracklet = true;
      else if (field == "identity") data.has_identity = true;
      else if (field == "camera") data.has_camera = true;
      else if (field == "kind") data.has_kind = true;
      else if (field == "feature") has_feature = true;
      else throw InvalidInput("dataset header lists unknown field '" + field + "'");
    }
    if (!has_tracklet || !has_feature) {
      throw InvalidInput("dataset header must list the tracklet and feature fields");
    }
  }

  std::map<long, int> index_of;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_tabs(line);
    if (static_cast<int>(fields.size()) < 4) {
      throw InvalidInput("dataset line " + std::to_string(line_no) +
                         ": expected 4 metadata fields, got " +
                         std::to_string(fields.size()));
    }
    const long tracklet_id = parse_long(fields[0], line_no, "tracklet id");
    if (static_cast<int>(fields.size()) != 4 + dim) {
      throw InvalidInput("dataset line " + std::to_string(line_no) +
                         " (tracklet " + std::to_string(tracklet_id) +
                         "): feature has " +
                         std::to_string(static_cast<int>(fields.size()) - 4) +
                         " values, expected " + std::to_string(dim));
    }
    const long identity =
        fields[1] == "-" ? -1 : parse_long(fields[1], line_no, "identity");
    const int camera =
        fields[2] == "-" ? -1
                         : static_cast<int>(parse_long(fields[2], line_no, "camera"));
    FrameRecord frame;
    try {
      frame.kind = frame_kind_from_string(fields[3]);
    } catch (const InvalidInput&) {
      throw InvalidInput("dataset line " + std::to_string(line_no) +
                         ": bad kind '" + fields[3] + "'");
    }
    frame.feature = Vector(dim);
    for (int i = 0; i < dim; ++i) {
      try {
        frame.feature[i] = parse_double(fields[4 + i]);
      } catch (const InvalidInput&) {
        throw InvalidInput("dataset line " + std::to_string(line_no) +
                           " (tracklet " + std::to_string(tracklet_id) +
                           "): bad feature value '" + fields[4 + i] + "'");
      }
    }

    auto [it, inserted] =
        index_of.emplace(tracklet_id, data.tracklet_count());
    if (inserted) {
      Tracklet t;
      t.id = tracklet_id;
      t.identity = identity;
      t.camera = camera;
      data.tracklets.push_back(std::move(t));
    } else {
      const Tracklet& existing = data.tracklets[it->second];
      if (existing.identity != identity || existing.camera != camera) {
        throw InvalidInput("tracklet " + std::to_string(tracklet_id) +
                           " has inconsistent identity or camera metadata");
      }
    }
    data.tracklets[it->second].frames.push_back(std::move(frame));
  }
  data.validate();
  return data;
}

QueryGallerySplit split_query_gallery(const Dataset& dataset) {
  if (!dataset.has_camera) {
    throw InvalidInput("query/gallery split needs camera annotations");
  }
  if (!dataset.has_identity) {
    throw InvalidInput("query/gallery split needs identity annotations");
  }
  std::set<int> cameras;
  for (const Tracklet& t : dataset.tracklets) {
    cameras.insert(t.camera);
  }
  if (cameras.size() < 2) {
    throw InvalidInput("query/gallery split needs at least two cameras");
  }
  QueryGallerySplit split;
  std::set<long> gallery_identities;
  for (int i = 0; i < dataset.tracklet_count(); ++i) {
    if (dataset.tracklets[i].camera != 1) {
      split.gallery.push_back(i);
      gallery_identities.insert(dataset.tracklets[i].identity);
    }
  }
  for (int i = 0; i < dataset.tracklet_count(); ++i) {
    const Tracklet& t = dataset.tracklets[i];
    if (t.camera != 1) {
      continue;
    }
    if (gallery_identities.count(t.identity) == 0) {
      warn("identity " + std::to_string(t.identity) +
           " appears only in camera 1; tracklet " + std::to_string(t.id) +
           " excluded from the query set");
      continue;
    }
    split.query.push_back(i);
  }
  return split;
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "n_identities", "n_cameras", "tracklets_per_identity_per_camera",
      "frames_min", "frames_max", "input_dim", "easy_sigma", "hard_sigma",
      "camera_shift", "prototype_spread", "hard_fraction",
      "noise_fraction", "noise_mode",
      "min_prototype_angle_deg", "seed"};
  if (!j.is_object()) {
    throw ConfigError("synthetic spec must be a JSON object");
  }
  for (const auto& item : j.items()) {
    if (known.count(item.key()) == 0) {
      throw ConfigError("unknown synthetic spec key '" + item.key() + "'");
    }
  }
  SyntheticSpec spec;
  try {
    spec.n_identities = j.value("n_identities", spec.n_identities);
    spec.n_cameras = j.value("n_cameras", spec.n_cameras);
    spec.tracklets_per_identity_per_camera =
        j.value("tracklets_per_identity_per_camera",
                spec.tracklets_per_identity_per_camera);
    spec.frames_min = j.value("frames_min", spec.frames_min);
    spec.frames_max = j.value("frames_max", spec.frames_max);
    spec.input_dim = j.value("input_dim", spec.input_dim);
    spec.easy_sigma = j.value("easy_sigma", spec.easy_sigma);
    spec.hard_sigma = j.value("hard_sigma", spec.hard_sigma);
    spec.camera_shift = j.value("camera_shift", spec.camera_shift);
    spec.prototype_spread =
        j.value("prototype_spread", spec.prototype_spread);
    spec.hard_fraction = j.value("hard_fraction", spec.hard_fraction);
    spec.noise_fraction = j.value("noise_fraction", spec.noise_fraction);
    if (j.contains("noise_mode")) {
      spec.noise_mode = noise_mode_from_string(j.at("noise_mode"));
    }
    spec.min_prototype_angle_deg =
        j.value("min_prototype_angle_deg", spec.min_prototype_angle_deg);
    spec.seed = j.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::ordered_json SyntheticSpec::to_json() const {
  nlohmann::ordered_json j;
  j["n_identities"] = n_identities;
  j["n_cameras"] = n_cameras;
  j["tracklets_per_identity_per_camera"] = tracklets_per_identity_per_camera;
  j["frames_min"] = frames_min;
  j["frames_max"] = frames_max;
  j["input_dim"] = input_dim;
  j["easy_sigma"] = easy_sigma;
  j["hard_sigma"] = hard_sigma;
  j["camera_shift"] = camera_shift;
  j["prototype_spread"] = prototype_spread;
  j["hard_fraction"] = hard_fraction;
  j["noise_fraction"] = noise_fraction;
  j["noise_mode"] = to_string(noise_mode);
  j["min_prototype_angle_deg"] = min_prototype_angle_deg;
  j["seed"] = seed;
  return j;
}

}  // namespace nhac
