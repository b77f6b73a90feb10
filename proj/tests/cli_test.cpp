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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mar/checkpoint.hpp"
#include "mar/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status;
  std::string out, err;
};

Outcome mar_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = mar::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

// One fixture directory per test binary run: a tiny benchmark and config.
struct Workspace {
  fs::path root = fs::temp_directory_path() / "mar_cli_test";
  fs::path conf = root / "small.conf";
  fs::path data = root / "data";

  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(conf) << "# tiny run\n"
                           "n_persons_target = 10\nn_persons_aux = 20\nn_persons_test = 10\n"
                           "views_target = 3\nimages_per_person_per_view = 2\n"
                           "d_in = 8\nd_out = 8\nd_h = 12\nbatch_size = 30\np = 0.03\n"
                           "pretrain_epochs = 3\ntrain_epochs = 2\n";
  }
};

const Workspace& ws() {
  static const Workspace w;
  return w;
}

}  // namespace

TEST_CASE("synth then train writes a complete run") {
  const Workspace& w = ws();
  Outcome s = mar_cli({"synth", "--config", w.conf.string(), "--seed", "5", "--out", w.data.string()});
  REQUIRE(s.status == 0);
  for (const char* f : {"config.txt", "target.txt", "test.txt", "aux.txt"}) CHECK(fs::exists(w.data / f));

  const fs::path run = w.root / "run";
  Outcome t = mar_cli({"train", "--config", w.conf.string(), "--data", w.data.string(), "--out", run.string()});
  REQUIRE(t.status == 0);
  CHECK(t.out.find("rank1 = ") != std::string::npos);
  CHECK(line_count(run / "metrics.csv") == 1 + 2);
  CHECK(line_count(run / "pretrain_metrics.csv") == 1 + 3);
  CHECK(fs::exists(run / "config.txt"));
  CHECK(fs::exists(run / "final" / "config.txt"));
  CHECK(fs::exists(run / "pretrained"));

  SECTION("eval reports the metrics and the per-probe csv") {
    const fs::path csv = w.root / "probes.csv";
    Outcome e = mar_cli({"eval", "--checkpoint", (run / "final").string(), "--data",
                         (w.data / "test.txt").string(), "--probe-csv", csv.string()});
    REQUIRE(e.status == 0);
    for (const char* key : {"rank1 = ", "rank5 = ", "rank10 = ", "mAP = ", "valid_probes = "})
      CHECK(e.out.find(key) != std::string::npos);
    CHECK(line_count(csv) == 1 + 30);  // one probe per (person, view)
  }
  SECTION("training resumes from the pretrained checkpoint") {
    const fs::path again = w.root / "again";
    Outcome r = mar_cli({"train", "--data", w.data.string(), "--checkpoint",
                         (run / "pretrained").string(), "--config", w.conf.string(), "--out", again.string()});
    REQUIRE(r.status == 0);
    CHECK(r.out == t.out);
  }
  SECTION("mine-report tags every pair of the batch") {
    const fs::path rep = w.root / "report";
    Outcome m = mar_cli({"mine-report", "--checkpoint", (run / "final").string(), "--data",
                         w.data.string(), "--step", "1", "--out", rep.string()});
    REQUIRE(m.status == 0);
    CHECK(m.out.find("positives = ") != std::string::npos);
    CHECK(line_count(rep / "mining.csv") == 1 + 15 * 14 / 2);  // half of the batch is target
  }
}

TEST_CASE("sweep runs one training per value") {
  const Workspace& w = ws();
  const fs::path dir = w.root / "sweep";
  Outcome s = mar_cli({"sweep", "--config", w.conf.string(), "--set", "train_epochs=1", "--param",
                       "lambda1", "--values", "0,0.0002", "--out", dir.string()});
  REQUIRE(s.status == 0);
  CHECK(line_count(dir / "summary.csv") == 3);
  CHECK(fs::exists(dir / "lambda1=0" / "final"));
  CHECK(fs::exists(dir / "lambda1=0.0002" / "metrics.csv"));
}

TEST_CASE("command line exit statuses") {
  const Workspace& w = ws();
  CHECK(mar_cli({}).status == 1);
  CHECK(mar_cli({"train", "--bogus", "--out", "x"}).status == 1);
  CHECK(mar_cli({"train", "--help"}).status == 0);
  const Outcome key = mar_cli({"synth", "--set", "lamda1=2", "--out", (w.root / "k").string()});
  CHECK(key.status == 1);
  CHECK(key.err.find("lamda1") != std::string::npos);
  const fs::path bad = w.root / "bad";
  fs::create_directories(bad);
  std::ofstream(bad / "target.txt") << "dim = 8\ndomain = target\ncount = 4\n0,1,1,2\n";
  std::ofstream(bad / "aux.txt") << "dim = 8\ndomain = aux\ncount = 0\n";
  CHECK(mar_cli({"train", "--config", w.conf.string(), "--data", bad.string(), "--out",
                 (w.root / "b").string()})
            .status == 2);
  CHECK(mar_cli({"eval", "--checkpoint", (w.root / "missing").string()}).status == 2);
}
