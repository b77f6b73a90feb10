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

#include "mar/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "mar/checkpoint.hpp"
#include "mar/config.hpp"
#include "mar/data.hpp"
#include "mar/error.hpp"
#include "mar/evalset.hpp"
#include "mar/mining.hpp"
#include "mar/trainer.hpp"

namespace mar {

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "key = value configuration file");
    cmd->add_option("--set", sets, "key=value override, applied after --config");
  }

  // Defaults, then `base` (a config.txt found next to a checkpoint), then
  // --config, then --set.
  RunConfig resolve(const fs::path& base = {}) const {
    RunConfig rc;
    if (!base.empty() && fs::exists(base)) rc = load_run_config(base);
    if (!config.empty()) rc.apply(parse_key_values(read_file(config), config));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCode::kInvalidConfig, "--set expects key=value, got `" + s + "`");
      }
      rc.set(s.substr(0, eq), s.substr(eq + 1));
    }
    rc.train.validate();
    rc.synth.validate();
    return rc;
  }
};

struct Datasets {
  FeatureDataset target;
  FeatureDataset aux;
  std::optional<FeatureDataset> test;
};

// A --data directory holds target.txt, aux.txt and optionally test.txt, as
// written by `synth`. Without one the synthetic benchmark is regenerated
// from the configuration.
Datasets load_datasets(const std::string& data_dir, const RunConfig& rc) {
  Datasets d;
  if (data_dir.empty()) {
    SyntheticData s = generate(rc.synth);
    d.target = std::move(s.target);
    d.aux = std::move(s.aux);
    d.test = std::move(s.test);
    return d;
  }
  const fs::path dir(data_dir);
  d.target = load_dataset(dir / "target.txt");
  d.aux = load_dataset(dir / "aux.txt");
  if (fs::exists(dir / "test.txt")) d.test = load_dataset(dir / "test.txt");
  return d;
}

void write_config(const fs::path& dir, const RunConfig& rc) {
  fs::create_directories(dir);
  write_file_atomic(dir / "config.txt", rc.to_text());
}

void write_checkpoint(const fs::path& dir, const TrainState& state, const RunConfig& rc) {
  save_checkpoint(dir, state);
  write_config(dir, rc);
}

void print_metrics(std::ostream& out, const RetrievalMetrics& m) {
  out << "rank1 = " << m.rank(1) << '\n'
      << "rank5 = " << m.rank(5) << '\n'
      << "rank10 = " << m.rank(10) << '\n'
      << "mAP = " << m.mean_ap << '\n'
      << "valid_probes = " << m.valid_probes << '\n'
      << "skipped_probes = " << m.skipped_probes << '\n';
}

// Trains from scratch, or from a pretrained checkpoint when one is given, and
// writes everything a run produces under `out_dir`.
TrainResult train_run(const RunConfig& rc, const Datasets& d, const std::string& checkpoint,
                      const fs::path& out_dir) {
  const TrainConfig& cfg = rc.train;
  if (d.target.dim != cfg.d_in) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dataset dim " + std::to_string(d.target.dim) + " but d_in = " +
                    std::to_string(cfg.d_in));
  }
  const TrainingData data = TrainingData::from(d.target, d.aux, cfg.n_reference);
  TrainResult result;
  if (checkpoint.empty()) {
    result.pretrained = run_pretraining(cfg, data, &result.pretrain_log);
  } else {
    result.pretrained = load_checkpoint(checkpoint);
    if (result.pretrained.phase != Phase::kConstrained) {
      throw Error(ErrorCode::kInvalidConfig, "checkpoint `" + checkpoint + "` was not frozen");
    }
  }
  TrainHooks hooks;
  if (d.test) hooks.eval_set = &*d.test;
  result.final_state = run_constrained(result.pretrained, cfg, data, hooks, &result.train_log);

  write_config(out_dir, rc);
  if (checkpoint.empty()) {
    write_checkpoint(out_dir / "pretrained", result.pretrained, rc);
    write_file_atomic(out_dir / "pretrain_metrics.csv", metrics_csv(result.pretrain_log));
  }
  write_checkpoint(out_dir / "final", result.final_state, rc);
  write_file_atomic(out_dir / "metrics.csv", metrics_csv(result.train_log));
  return result;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train and evaluate cross-view embeddings with reference agents", "mar"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  ConfigFlags flags;
  std::string out_dir, data_dir, checkpoint;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic two-domain benchmark");
  flags.attach(synth);
  std::optional<std::uint64_t> seed;
  synth->add_option("--seed", seed, "Shortcut for --set seed=<n>");
  synth->add_option("--out", out_dir, "Output directory")->required();

  auto* pretrain = app.add_subcommand("pretrain", "Agent-learning pretraining only");
  flags.attach(pretrain);
  pretrain->add_option("--data", data_dir, "Directory written by `synth`");
  pretrain->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Pretraining followed by constrained training");
  flags.attach(train);
  train->add_option("--data", data_dir, "Directory written by `synth`");
  train->add_option("--checkpoint", checkpoint, "Start from this pretrained checkpoint");
  train->add_option("--out", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Cross-view retrieval metrics of a checkpoint");
  flags.attach(eval);
  std::string eval_file, probe_csv;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--data", eval_file, "Labeled dataset file (default: synthetic test split)");
  eval->add_option("--probe-csv", probe_csv, "Write per-probe average precision here");

  auto* report = app.add_subcommand("mine-report", "Dump the mining sets of one batch");
  flags.attach(report);
  std::uint64_t report_step = 0;
  std::string report_mode;
  report->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  report->add_option("--data", data_dir, "Directory written by `synth`");
  report->add_option("--step", report_step, "Batch index to reproduce");
  report->add_option("--mining", report_mode, "guided or feature (default: config)");
  report->add_option("--out", out_dir, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Rerun `train` over a grid of one key");
  flags.attach(sweep);
  std::string sweep_key, sweep_values;
  sweep->add_option("--param", sweep_key, "Key to vary, e.g. lambda1, lambda2, n_reference")
      ->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--data", data_dir, "Directory written by `synth`");
  sweep->add_option("--out", out_dir, "Output directory")->required();

  // Help for the subcommand being parsed, if any.
  auto usage = [&app] {
    const auto chosen = app.get_subcommands();
    return chosen.empty() ? app.help() : chosen.front()->help();
  };
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << usage();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << usage();
    return 1;
  }

  try {
    if (*synth) {
      if (seed) flags.sets.push_back("seed=" + std::to_string(*seed));
      const RunConfig rc = flags.resolve();
      const SyntheticData d = generate(rc.synth);
      const fs::path dir(out_dir);
      write_config(dir, rc);
      save_dataset(dir / "target.txt", d.target);
      save_dataset(dir / "test.txt", d.test);
      save_dataset(dir / "aux.txt", d.aux);
      out << "wrote " << d.target.size() << " target, " << d.test.size() << " test and "
          << d.aux.size() << " auxiliary samples to " << dir.string() << '\n';
    } else if (*pretrain) {
      const RunConfig rc = flags.resolve();
      const Datasets d = load_datasets(data_dir, rc);
      const TrainingData data = TrainingData::from(d.target, d.aux, rc.train.n_reference);
      std::vector<EpochRecord> log;
      const TrainState state = run_pretraining(rc.train, data, &log);
      const fs::path dir(out_dir);
      write_config(dir, rc);
      write_checkpoint(dir / "pretrained", state, rc);
      write_file_atomic(dir / "pretrain_metrics.csv", metrics_csv(log));
      out << "scale = " << state.scale << '\n';
      if (d.test) print_metrics(out, evaluate_retrieval(state.encoder, *d.test, rc.train.threads));
    } else if (*train) {
      const RunConfig rc = flags.resolve();
      const TrainResult r = train_run(rc, load_datasets(data_dir, rc), checkpoint, out_dir);
      const EpochRecord& last = r.train_log.back();
      out << "total = " << last.total << '\n';
      if (last.rank1) out << "rank1 = " << *last.rank1 << "\nmAP = " << *last.mean_ap << '\n';
    } else if (*eval) {
      const RunConfig rc = flags.resolve(fs::path(checkpoint) / "config.txt");
      const TrainState state = load_checkpoint(checkpoint);
      const FeatureDataset test =
          eval_file.empty() ? generate(rc.synth).test : load_dataset(eval_file);
      const auto [probes, gallery] = split_probe_gallery(embed(state.encoder, test, rc.train.threads));
      const std::size_t ks[] = {1, 5, 10};
      const RetrievalMetrics m = cmc_map(probes, gallery, ks, rc.train.threads);
      print_metrics(out, m);
      if (!probe_csv.empty()) {
        std::ostringstream csv;
        csv.precision(17);
        csv << "probe,person_id,view_id,ap\n";
        for (std::size_t i = 0; i < probes.size(); ++i) {
          csv << i << ',' << probes.person_ids[i] << ',' << probes.view_ids[i] << ',';
          if (std::isnan(m.probe_ap[i])) csv << "nan\n";
          else csv << m.probe_ap[i] << '\n';
        }
        write_file_atomic(probe_csv, csv.str());
      }
    } else if (*report) {
      RunConfig rc = flags.resolve(fs::path(checkpoint) / "config.txt");
      if (!report_mode.empty()) rc.set("mining", report_mode);
      const TrainState state = load_checkpoint(checkpoint);
      if (state.phase != Phase::kConstrained) {
        throw Error(ErrorCode::kInvalidConfig, "mine-report needs a frozen checkpoint");
      }
      const Datasets d = load_datasets(data_dir, rc);
      const TrainingData data = TrainingData::from(d.target, d.aux, rc.train.n_reference);
      const Batch b = compose_batch(rc.train, report_step, data.target_features.size(),
                                    data.aux_features.size());
      const BatchData batch = gather(data, b);
      const BatchMining mined = mine(state, rc.train, batch.target, rc.train.mining);

      std::vector<char> tag(mined.similarities.values().size(), 'x');
      for (const auto& [i, j] : mined.sets.positives) tag[mined.similarities.index(i, j)] = 'P';
      for (const auto& [i, j] : mined.sets.hard_negatives) tag[mined.similarities.index(i, j)] = 'N';
      std::ostringstream csv;
      csv.precision(17);
      csv << "pair_i,pair_j,similarity,agreement,set\n";
      for (std::size_t k = 0; k < tag.size(); ++k) {
        const auto [i, j] = mined.similarities.pair(k);
        csv << b.target[i] << ',' << b.target[j] << ',' << mined.similarities.values()[k] << ','
            << mined.agreements.values()[k] << ','
            << (tag[k] == 'x' ? "none" : std::string(1, tag[k])) << '\n';
      }
      const fs::path dir(out_dir);
      write_config(dir, rc);
      write_file_atomic(dir / "mining.csv", csv.str());
      out << "positives = " << mined.sets.positives.size() << '\n'
          << "hard_negatives = " << mined.sets.hard_negatives.size() << '\n'
          << "similarity_threshold = " << mined.sets.thresholds.similarity << '\n'
          << "agreement_threshold = " << mined.sets.thresholds.agreement << '\n';
    } else if (*sweep) {
      const RunConfig base = flags.resolve();
      const Datasets d = load_datasets(data_dir, base);
      const fs::path dir(out_dir);
      write_config(dir, base);
      std::ostringstream summary;
      summary.precision(17);
      summary << sweep_key << ",rank1,mAP,total\n";
      for (const auto& v : split_list(sweep_values)) {
        RunConfig rc = base;
        rc.set(sweep_key, v);
        rc.train.validate();
        const TrainResult r = train_run(rc, d, "", dir / (sweep_key + "=" + v));
        const EpochRecord& last = r.train_log.back();
        summary << v << ',' << (last.rank1 ? std::to_string(*last.rank1) : "") << ','
                << (last.mean_ap ? std::to_string(*last.mean_ap) : "") << ',' << last.total
                << '\n';
        out << sweep_key << " = " << v << ": rank1 = "
            << (last.rank1 ? std::to_string(*last.rank1) : "n/a") << '\n';
      }
      write_file_atomic(dir / "summary.csv", summary.str());
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace mar
