// Copyright 2026 The midigap Authors
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

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "midigap/error.hpp"

namespace cli = midigap::cli;

namespace {

void emit(const cli::RunRecord& record, const cli::fs::path& manifest) {
  cli::write_manifest(manifest, record);
  std::cout << record.command << ": " << record.summary << "\n";
}

cli::fs::path beside(const cli::fs::path& file) {
  cli::fs::path m = file;
  m += ".manifest.json";
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixtures of discrete-time Gaussian processes: fit, update, and optimize trajectories"};
  app.require_subcommand(1);

  cli::SynthArgs synth;
  std::string family = "sine";
  std::string noise_kind = "iid";
  auto* s = app.add_subcommand("synth", "Generate a synthetic demonstration dataset");
  s->add_option("--family", family, "sine|piecewise_linear|oscillatory|non_stationary|chaotic|discontinuous|"
                                    "multimode_pose|arm_traced")->capture_default_str();
  s->add_option("--demos", synth.spec.n_demos)->capture_default_str();
  s->add_option("--length", synth.spec.length)->capture_default_str();
  s->add_option("--noise", synth.spec.noise)->capture_default_str();
  s->add_option("--noise-kind", noise_kind, "iid|smooth")->capture_default_str();
  s->add_option("--seed", synth.spec.seed)->capture_default_str();
  s->add_option("--rate", synth.spec.sample_rate_hz, "Sample rate in Hz")->capture_default_str();
  s->add_option("--modes", synth.spec.modes)->capture_default_str();
  s->add_option("--separation", synth.spec.separation, "Distance between neighbouring modes")->capture_default_str();
  s->add_flag("--second-half-only", synth.spec.second_half_only);
  s->add_flag("--object-frame", synth.spec.object_frame);
  s->add_option("--chain", synth.spec.chain, "Chain for arm_traced")->capture_default_str();
  s->add_option("--out", synth.out_dir, "Output directory")->required();

  cli::PartitionArgs part;
  auto* p = app.add_subcommand("partition", "Discover modes among demonstrations");
  p->add_option("--data", part.data)->required()->check(CLI::ExistingFile);
  p->add_option("--method", part.method, "kmeans|gmm|dbscan")->capture_default_str();
  p->add_option("--subsample", part.subsample_length, "Points per demo for clustering")->capture_default_str();
  p->add_option("--eps", part.eps)->capture_default_str();
  p->add_option("--min-pts", part.min_pts)->capture_default_str();
  p->add_option("--k-max", part.k_max, "0 selects min(10, N-1)")->capture_default_str();
  p->add_option("--seed", part.seed)->capture_default_str();
  p->add_option("--out", part.out)->required();

  cli::FitArgs fitargs;
  std::optional<std::string> fit_partition;
  auto* f = app.add_subcommand("fit", "Fit a (mixture) DiGaP");
  f->add_option("--data", fitargs.data)->required()->check(CLI::ExistingFile);
  f->add_option("--partition", fit_partition)->check(CLI::ExistingFile);
  f->add_flag("--framed", fitargs.framed, "Fit one model per object frame");
  f->add_option("--length", fitargs.length, "Model length; default mean demo length");
  f->add_option("--var-floor", fitargs.var_floor)->capture_default_str();
  f->add_option("--out", fitargs.out)->required();

  cli::PredictArgs pred;
  std::optional<std::string> frames_from;
  auto* r = app.add_subcommand("predict", "Regress a trajectory from a model");
  r->add_option("--model", pred.model)->required()->check(CLI::ExistingFile);
  r->add_option("--mode", pred.mode, "1-based mode; sampled when absent");
  r->add_option("--path", pred.path, "1-based modal path for skill chains");
  r->add_option("--frames-from", frames_from, "Dataset providing frame poses for framed models");
  r->add_option("--demo", pred.demo, "Demo index within --frames-from")->capture_default_str();
  r->add_option("--seed", pred.seed)->capture_default_str();
  r->add_option("--out", pred.out)->required();

  cli::UpdateArgs upd;
  auto* u = app.add_subcommand("update", "Condition a model on constraints");
  u->add_option("--model", upd.model)->required()->check(CLI::ExistingFile);
  u->add_option("--constraints", upd.constraints)->required()->check(CLI::ExistingFile);
  u->add_option("--seed", upd.seed)->capture_default_str();
  u->add_option("--samples", upd.samples)->capture_default_str();
  u->add_option("--z", upd.z)->capture_default_str();
  u->add_option("--q", upd.q, "L_q norm exponent; inf for max")->capture_default_str();
  u->add_option("--d-uni", upd.d_uni);
  u->add_option("--out", upd.out)->required();
  u->add_option("--report", upd.report)->required();

  cli::OptimizeArgs opt;
  auto* o = app.add_subcommand("optimize", "Variance-aware joint path optimization and modal reweighting");
  o->add_option("--model", opt.model)->required()->check(CLI::ExistingFile);
  o->add_option("--chain", opt.chain, "planar3|ur5|panda or chain file")->capture_default_str();
  o->add_option("--q0", opt.q0, "Initial joint configuration; default mid-range")->expected(-1);
  o->add_option("--lambda-q", opt.path.lambda_q)->capture_default_str();
  o->add_option("--lambda-e", opt.path.lambda_e)->capture_default_str();
  o->add_option("--z", opt.path.z)->capture_default_str();
  o->add_option("--max-outer", opt.path.max_outer)->capture_default_str();
  o->add_option("--q", opt.q_norm, "L_q norm exponent")->capture_default_str();
  o->add_option("--out", opt.out_dir, "Output directory")->required();

  cli::EvalArgs ev;
  std::optional<std::string> ev_model, ev_partition, ev_labels;
  auto* e = app.add_subcommand("eval", "Compare a prediction against a reference");
  e->add_option("--predicted", ev.predicted)->required()->check(CLI::ExistingFile);
  e->add_option("--reference", ev.reference)->required()->check(CLI::ExistingFile);
  e->add_option("--model", ev_model, "Mixture for the NLL of the prediction")->check(CLI::ExistingFile);
  e->add_option("--mode", ev.mode, "1-based mode for the NLL")->capture_default_str();
  e->add_option("--partition", ev_partition)->check(CLI::ExistingFile);
  e->add_option("--labels-from", ev_labels, "Dataset with ground-truth labels")->check(CLI::ExistingFile);
  e->add_option("--out", ev.out)->required();

  cli::PipelineArgs pipe;
  auto* l = app.add_subcommand("pipeline", "synth -> partition -> fit -> update -> optimize -> eval");
  l->add_option("--config", pipe.config)->required()->check(CLI::ExistingFile);
  l->add_option("--out", pipe.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  try {
    if (*s) {
      synth.spec.family = midigap::parse_synth_family(family);
      synth.spec.noise_kind = midigap::parse_noise_kind(noise_kind);
      emit(cli::run_synth(synth), synth.out_dir / "manifest.json");
    } else if (*p) {
      emit(cli::run_partition(part), beside(part.out));
    } else if (*f) {
      if (fit_partition) fitargs.partition = *fit_partition;
      emit(cli::run_fit(fitargs), beside(fitargs.out));
    } else if (*r) {
      if (frames_from) pred.frames_from = *frames_from;
      emit(cli::run_predict(pred), beside(pred.out));
    } else if (*u) {
      emit(cli::run_update(upd), beside(upd.out));
    } else if (*o) {
      emit(cli::run_optimize(opt), opt.out_dir / "manifest.json");
    } else if (*e) {
      if (ev_model) ev.model = *ev_model;
      if (ev_partition) ev.partition = *ev_partition;
      if (ev_labels) ev.labels_from = *ev_labels;
      emit(cli::run_eval(ev), beside(ev.out));
    } else if (*l) {
      emit(cli::run_pipeline(pipe), pipe.out_dir / "manifest.json");
    }
  } catch (const midigap::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
