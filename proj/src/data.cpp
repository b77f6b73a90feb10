// Copyright 2026 The softmar Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mar/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mar/checkpoint.hpp"
#include "mar/error.hpp"

namespace mar {

const char* to_string(Domain d) { return d == Domain::kTarget ? "target" : "aux"; }

void FeatureDataset::validate() const {
  if (person_ids.size() != features.size() || view_ids.size() != features.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset columns differ in length");
  }
  for (const auto& f : features) {
    if (static_cast<std::size_t>(f.size()) != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature of dimension " + std::to_string(f.size()) + " in a dim-" +
                      std::to_string(dim) + " dataset");
    }
  }
}

bool FeatureDataset::operator==(const FeatureDataset& other) const {
  if (domain != other.domain || dim != other.dim || person_ids != other.person_ids ||
      view_ids != other.view_ids || features.size() != other.features.size()) {
    return false;
  }
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i] != other.features[i]) return false;
  return true;
}

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidSpec, why); };
  if (n_persons_target == 0 || n_persons_aux < 2) fail("need target persons and >= 2 aux persons");
  if (views_target < 2) fail("need at least 2 views so cross-view pairs exist");
  if (images_per_person_per_view == 0) fail("images_per_person_per_view must be positive");
  if (d_in < 2) fail("d_in must be at least 2");
  if (clue_dim == 0 || clue_dim > d_in) fail("clue_dim must lie in [1, d_in]");
  if (!(confuser_fraction >= 0.0 && confuser_fraction <= 1.0)) fail("confuser_fraction outside [0, 1]");
  if (!(noise_sigma >= 0.0) || !(view_transform_scale >= 0.0) || !(view_offset >= 0.0) || !(clue_offset >= 0.0)) {
    fail("scales must be non-negative");
  }
}

namespace {

struct Camera {
  Mat transform;
  Vec offset;
};

class Generator {
 public:
  Generator(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed) {}

  Vec gaussian(std::size_t d, double sigma) {
    Vec v(static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = sigma * gauss_(rng_);
    return v;
  }

  Vec sphere(std::size_t d) {
    Vec v;
    do {
      v = gaussian(d, 1.0);
    } while (v.norm() <= kNormEpsilon);
    return normalize(v).coords();
  }

  std::vector<Camera> cameras(std::size_t count) {
    const std::size_t d = spec_.d_in;
    std::vector<Camera> out;
    for (std::size_t v = 0; v < count; ++v) {
      Camera c;
      c.transform = Mat(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (Eigen::Index k = 0; k < c.transform.size(); ++k)
        c.transform.data()[k] = gauss_(rng_) / std::sqrt(static_cast<double>(d));
      c.offset = sphere(d);
      out.push_back(std::move(c));
    }
    return out;
  }

  // Moves a copy of `base` within the clue subspace (the first clue_dim
  // coordinates) and projects back to the sphere.
  Vec confuser_of(const Vec& base) {
    Vec clue = Vec::Zero(base.size());
    clue.head(static_cast<Eigen::Index>(spec_.clue_dim)) = sphere(spec_.clue_dim);
    return normalize(base + spec_.clue_offset * clue).coords();
  }

  void render(FeatureDataset& ds, std::int64_t id, const Vec& prototype,
              const std::vector<Camera>& cams) {
    for (std::size_t v = 0; v < cams.size(); ++v) {
      const Vec clean =
          prototype + spec_.view_transform_scale *
                          (cams[v].transform * prototype + spec_.view_offset * cams[v].offset);
      for (std::size_t r = 0; r < spec_.images_per_person_per_view; ++r) {
        ds.features.push_back(clean + gaussian(spec_.d_in, spec_.noise_sigma));
        ds.person_ids.push_back(id);
        ds.view_ids.push_back(static_cast<int>(v + 1));
      }
    }
  }

 private:
  const SyntheticSpec& spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Generator gen(spec);
  SyntheticData out;
  out.target.domain = Domain::kTarget;
  out.test.domain = Domain::kTarget;
  out.aux.domain = Domain::kAuxiliary;
  out.target.dim = out.test.dim = out.aux.dim = spec.d_in;

  const auto target_cams = gen.cameras(spec.views_target);
  const auto aux_cams = gen.cameras(spec.views_target);

  const std::size_t n_target_side = spec.n_persons_target + spec.n_persons_test;
  out.confuser_of.assign(n_target_side, -1);

  // Target-side identities: train ids [0, n_target), test ids after them.
  // Confusers are drawn within each split so every near-duplicate pair is
  // visible to the split that contains it.
  std::vector<Vec> prototypes(n_target_side);
  auto build_split = [&](std::size_t first, std::size_t count) {
    const auto n_conf = static_cast<std::size_t>(
        std::llround(spec.confuser_fraction * static_cast<double>(count) / 2.0));
    for (std::size_t p = first; p < first + count; ++p) prototypes[p] = gen.sphere(spec.d_in);
    // The last n_conf persons of the split mimic the first n_conf.
    for (std::size_t c = 0; c < n_conf; ++c) {
      const std::size_t base = first + c;
      const std::size_t copy = first + count - 1 - c;
      if (copy <= base) break;
      prototypes[copy] = gen.confuser_of(prototypes[base]);
      out.confuser_of[copy] = static_cast<std::int64_t>(base);
    }
  };
  build_split(0, spec.n_persons_target);
  build_split(spec.n_persons_target, spec.n_persons_test);

  for (std::size_t p = 0; p < n_target_side; ++p) {
    auto& split = p < spec.n_persons_target ? out.target : out.test;
    gen.render(split, static_cast<std::int64_t>(p), prototypes[p], target_cams);
  }
  for (std::size_t p = 0; p < spec.n_persons_aux; ++p) {
    gen.render(out.aux, static_cast<std::int64_t>(n_target_side + p), gen.sphere(spec.d_in),
               aux_cams);
  }
  return out;
}

namespace {

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line,
                            const std::string& why) {
  throw Error(ErrorCode::kMalformedFile,
              path.string() + ":" + std::to_string(line) + ": " + why);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const std::string t = trim(s);
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

FeatureDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());

  FeatureDataset ds;
  bool have_dim = false, have_domain = false, have_count = false;
  std::size_t count = 0;
  std::size_t line_no = 0;
  std::string line;
  while (!(have_dim && have_domain && have_count) && std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) malformed(path, line_no, "expected a `key = value` header line");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key == "dim") {
      if (!parse_number(value, ds.dim) || ds.dim == 0) malformed(path, line_no, "bad dim");
      have_dim = true;
    } else if (key == "domain") {
      if (value == "target") {
        ds.domain = Domain::kTarget;
      } else if (value == "aux") {
        ds.domain = Domain::kAuxiliary;
      } else {
        malformed(path, line_no, "domain must be target or aux");
      }
      have_domain = true;
    } else if (key == "count") {
      if (!parse_number(value, count)) malformed(path, line_no, "bad count");
      have_count = true;
    } else {
      malformed(path, line_no, "unknown header key `" + key + "`");
    }
  }
  if (!(have_dim && have_domain && have_count)) malformed(path, line_no, "incomplete header");

  ds.features.reserve(count);
  while (ds.features.size() < count && std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string_view> fields;
    std::string_view rest(t);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 3) malformed(path, line_no, "record needs person_id,view_id,features");
    if (fields.size() - 2 != ds.dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  path.string() + ":" + std::to_string(line_no) + ": record has " +
                      std::to_string(fields.size() - 2) + " features, header says " +
                      std::to_string(ds.dim));
    }
    std::int64_t pid = 0;
    int vid = 0;
    if (!parse_number(fields[0], pid)) malformed(path, line_no, "bad person_id");
    if (!parse_number(fields[1], vid)) malformed(path, line_no, "bad view_id");
    Vec f(static_cast<Eigen::Index>(ds.dim));
    for (std::size_t k = 0; k < ds.dim; ++k) {
      if (!parse_number(fields[k + 2], f[static_cast<Eigen::Index>(k)]) ||
          !std::isfinite(f[static_cast<Eigen::Index>(k)])) {
        malformed(path, line_no, "bad feature value in column " + std::to_string(k + 3));
      }
    }
    ds.person_ids.push_back(pid);
    ds.view_ids.push_back(vid);
    ds.features.push_back(std::move(f));
  }
  if (ds.features.size() != count) {
    malformed(path, line_no,
              "truncated: expected " + std::to_string(count) + " records, found " +
                  std::to_string(ds.features.size()));
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const FeatureDataset& dataset) {
  dataset.validate();
  std::string out;
  out += "dim = " + std::to_string(dataset.dim) + "\n";
  out += std::string("domain = ") + to_string(dataset.domain) + "\n";
  out += "count = " + std::to_string(dataset.size()) + "\n";
  char buf[64];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out += std::to_string(dataset.person_ids[i]);
    out += ',';
    out += std::to_string(dataset.view_ids[i]);
    for (Eigen::Index k = 0; k < dataset.features[i].size(); ++k) {
      // Shortest representation that parses back to the same double.
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, dataset.features[i][k]);
      out += ',';
      out.append(buf, end);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace mar
