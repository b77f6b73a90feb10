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

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "mar/data.hpp"
#include "mar/error.hpp"
#include "oracles.hpp"

using namespace mar;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_persons_target = 10;
  s.n_persons_aux = 12;
  s.n_persons_test = 8;
  s.views_target = 3;
  s.images_per_person_per_view = 2;
  s.d_in = 8;
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mar_data_test";
  fs::create_directories(dir);
  return dir / name;
}

ErrorCode load_error(const fs::path& p) {
  try {
    load_dataset(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const SyntheticData a = generate(small_spec());
  const SyntheticData b = generate(small_spec());
  CHECK(a.target == b.target);
  CHECK(a.test == b.test);
  CHECK(a.aux == b.aux);
  SyntheticSpec other = small_spec();
  other.seed = 8;
  CHECK_FALSE(generate(other).target == a.target);
}

TEST_CASE("generated datasets have the declared layout") {
  const SyntheticSpec s = small_spec();
  const SyntheticData d = generate(s);
  const std::size_t per_person = s.views_target * s.images_per_person_per_view;
  CHECK(d.target.size() == s.n_persons_target * per_person);
  CHECK(d.test.size() == s.n_persons_test * per_person);
  CHECK(d.aux.size() == s.n_persons_aux * per_person);
  CHECK(d.target.domain == Domain::kTarget);
  CHECK(d.aux.domain == Domain::kAuxiliary);

  const std::set<std::int64_t> t(d.target.person_ids.begin(), d.target.person_ids.end());
  const std::set<std::int64_t> q(d.test.person_ids.begin(), d.test.person_ids.end());
  const std::set<std::int64_t> x(d.aux.person_ids.begin(), d.aux.person_ids.end());
  CHECK(t.size() == s.n_persons_target);
  CHECK(q.size() == s.n_persons_test);
  CHECK(x.size() == s.n_persons_aux);
  for (auto id : t) CHECK((q.count(id) == 0 && x.count(id) == 0));
  for (auto id : q) CHECK(x.count(id) == 0);
  for (const auto* ds : {&d.target, &d.test, &d.aux}) {
    for (int v : ds->view_ids) CHECK((v >= 1 && v <= static_cast<int>(s.views_target)));
    for (const auto& f : ds->features) CHECK(f.size() == static_cast<Eigen::Index>(s.d_in));
  }
}

TEST_CASE("without noise or distortion every image is its unit prototype") {
  SyntheticSpec s = small_spec();
  s.noise_sigma = 0.0;
  s.view_transform_scale = 0.0;
  const SyntheticData d = generate(s);
  for (std::size_t i = 0; i < d.target.size(); ++i) {
    CHECK(std::abs(d.target.features[i].norm() - 1.0) <= 1e-12);
    for (std::size_t j = 0; j < d.target.size(); ++j) {
      if (d.target.person_ids[i] == d.target.person_ids[j]) CHECK(d.target.features[i] == d.target.features[j]);
    }
  }
}

TEST_CASE("confusers sit closer to their base than typical pairs") {
  SyntheticSpec s = small_spec();
  s.n_persons_target = 40;
  s.noise_sigma = 0.0;
  s.view_transform_scale = 0.0;
  const SyntheticData d = generate(s);
  std::map<std::int64_t, oracle::Vec> proto;
  for (std::size_t i = 0; i < d.target.size(); ++i) proto[d.target.person_ids[i]] = d.target.features[i];
  std::vector<double> cosines;
  for (auto a = proto.begin(); a != proto.end(); ++a)
    for (auto b = std::next(a); b != proto.end(); ++b) cosines.push_back(oracle::cos_sim(a->second, b->second));
  std::nth_element(cosines.begin(), cosines.begin() + cosines.size() / 2, cosines.end());
  const double median = cosines[cosines.size() / 2];
  std::size_t confusers = 0;
  for (std::size_t p = 0; p < s.n_persons_target; ++p) {
    const std::int64_t base = d.confuser_of[p];
    if (base < 0) continue;
    ++confusers;
    CHECK(oracle::cos_sim(proto[static_cast<std::int64_t>(p)], proto[base]) > median);
  }
  CHECK(confusers == 6);  // round(0.3 * 40 / 2)
}

TEST_CASE("invalid specs are rejected") {
  SyntheticSpec s = small_spec();
  s.clue_dim = 0;
  CHECK_THROWS_AS(generate(s), Error);
  s = small_spec();
  s.confuser_fraction = 1.5;
  CHECK_THROWS_AS(generate(s), Error);
  s = small_spec();
  s.noise_sigma = -1.0;
  CHECK_THROWS_AS(generate(s), Error);
}

TEST_CASE("dataset files round-trip exactly") {
  const SyntheticData d = generate(small_spec());
  const fs::path p = scratch("aux.txt");
  save_dataset(p, d.aux);
  CHECK(load_dataset(p) == d.aux);
}

TEST_CASE("malformed dataset files") {
  SECTION("truncated") {
    const fs::path p = scratch("short.txt");
    std::ofstream(p) << "dim = 2\ndomain = target\ncount = 3\n0,1,0.5,0.5\n1,2,0.1,0.2\n";
    CHECK(load_error(p) == ErrorCode::kMalformedFile);
  }
  SECTION("row width differs from the header") {
    const fs::path p = scratch("wide.txt");
    std::ofstream(p) << "dim = 2\ndomain = target\ncount = 1\n0,1,0.5,0.5,0.7\n";
    CHECK(load_error(p) == ErrorCode::kDimensionMismatch);
  }
  SECTION("non-numeric value") {
    const fs::path p = scratch("nan.txt");
    std::ofstream(p) << "dim = 2\ndomain = aux\ncount = 1\n0,1,0.5,abc\n";
    CHECK(load_error(p) == ErrorCode::kMalformedFile);
  }
  SECTION("missing file") { CHECK(load_error(scratch("absent.txt")) == ErrorCode::kIo); }
}
