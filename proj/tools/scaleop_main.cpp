// scaleop: generate multi-scale PDE datasets, train/evaluate the spectral
// operator, verify scale consistency, and run test-time domain decomposition.

#include "scaleop/datagen.hpp"
#include "scaleop/decomp.hpp"
#include "scaleop/io.hpp"
#include "scaleop/training.hpp"
#include "scaleop/verify.hpp"
#include "scaleop/runtime.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace scaleop;

namespace {

std::vector<Real> parse_list(const std::string& csv) {
  std::vector<Real> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  if (out.empty()) throw DomainError("empty list: " + csv);
  return out;
}

Json load_json_arg(const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) throw IoError("cannot open arch file: " + arg.substr(1));
    return Json::parse(in);
  }
  return Json::parse(arg);
}

ArchSpec arch_preset(const std::string& name, int rank) {
  ArchSpec a;
  a.rank = rank;
  if (name == "fno") {
    a.channels = 16;
    a.modes = 12;
    a.layers = 3;
    a.levels = 1;
    a.boundary_normalize = true;
  } else if (name == "sino") {
    a.channels = 16;
    a.modes = 16;
    a.layers = 3;
    a.levels = 2;
    a.shared_level0 = true;
    a.scale_informed = true;
    a.freq_embedding = true;
    a.spectral_norm = true;
    a.boundary_normalize = true;
  } else {
    Json j = load_json_arg(name);
    j["rank"] = rank;
    return arch_from_json(j);
  }
  a.validate();
  return a;
}

int run_gen(const std::string& eq_name, const std::string& scales_csv,
            Index count, Index res, Index nt, Index history,
            std::uint64_t seed, const std::string& out) {
  const Equation eq = equation_from_name(eq_name);
  const std::vector<Real> scales = parse_list(scales_csv);

  Dataset ds;
  ds.manifest = {{"equation", eq_name},
                 {"scales", scales},
                 {"count_per_scale", count},
                 {"resolution", res},
                 {"nt", nt},
                 {"history", history},
                 {"seed", seed},
                 {"generator", "scaleop gen"},
                 {"rng", "philox4x32-10 streams keyed by (seed, index)"}};

  Index idx = 0;
  for (Real scale : scales) {
    for (Index i = 0; i < count; ++i, ++idx) {
      const std::uint64_t iseed = Philox(seed, idx).at(0);
      switch (eq) {
        case Equation::Darcy:
          ds.instances.push_back(make_darcy_instance(scale, res, iseed));
          break;
        case Equation::Helmholtz:
          ds.instances.push_back(make_helmholtz_instance(scale, res, iseed));
          break;
        case Equation::Burgers:
          ds.instances.push_back(
              make_burgers_instance(1.0 / scale, res - 1, nt, iseed));
          break;
        case Equation::NavierStokes:
          ds.instances.push_back(make_ns_instance(scale, res, history, iseed));
          break;
      }
    }
  }
  save_dataset(out, ds);
  std::cout << "wrote " << ds.instances.size() << " instances to " << out
            << "\n";
  return 0;
}

std::map<Real, std::vector<PdeInstance>> group_by_scale(
    std::vector<PdeInstance> instances, const std::vector<Real>& filter) {
  std::map<Real, std::vector<PdeInstance>> by_scale;
  for (auto& inst : instances) {
    if (!filter.empty()) {
      bool keep = false;
      for (Real s : filter) keep = keep || std::abs(s - inst.k) < 1e-9;
      if (!keep) continue;
    }
    by_scale[inst.k].push_back(std::move(inst));
  }
  return by_scale;
}

int run_train(const std::string& data_path, const std::string& arch_arg,
              const std::string& aug_csv, TrainConfig cfg,
              const std::string& out) {
  Dataset ds = load_dataset(data_path);
  require(!ds.instances.empty(), "train: dataset is empty");

  for (const auto& tok : {std::string("sub"), std::string("super"),
                          std::string("rot"), std::string("ref")}) {
    (void)tok;
  }
  std::stringstream ss(aug_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty() || tok == "none") continue;
    if (tok == "sub") cfg.aug_sub = true;
    else if (tok == "super") cfg.aug_super = true;
    else if (tok == "rot") cfg.aug_rot = true;
    else if (tok == "ref") cfg.aug_ref = true;
    else throw DomainError("unknown augmentation: " + tok);
  }

  const PdeInstance& first = ds.instances.front();
  ArchSpec arch = arch_preset(arch_arg, first.domain.naxes());
  const Index out_ch = first.equation == Equation::Helmholtz ? 2 : 1;
  SinoModel model = SinoModel::init(arch, input_channel_count(first), out_ch,
                                    cfg.seed);
  cfg.super_res = first.domain.axes[0].res;

  MetricsWriter metrics(out + ".metrics.ndjson");
  Json history = Json::array();
  TrainResult result =
      train(std::move(model), ds.instances, cfg, [&](const EpochMetrics& em) {
        Json rec = epoch_to_json(em);
        metrics.write(rec);
        history.push_back(rec);
        std::cout << "epoch " << em.epoch << " loss " << em.train_loss << " ("
                  << em.seconds << "s)\n";
      });

  Json echo = {{"data", data_path},
               {"arch", arch_to_json(result.model.arch)},
               {"aug", aug_csv},
               {"epochs", cfg.epochs},
               {"batch_size", cfg.batch_size},
               {"lr", cfg.lr},
               {"seed", cfg.seed},
               {"lambda_set", cfg.lambda_set},
               {"dataset_seed", ds.manifest.value("seed", std::uint64_t(0))}};
  Checkpoint ck = checkpoint_from(result.model, echo);
  ck.metric_history = history;
  save_checkpoint(out, ck);
  std::cout << "wrote checkpoint " << out << "\n";
  if (result.diverged) {
    std::cerr << "training diverged; checkpoint holds the last finite state\n";
    return 4;
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& scales_csv, const std::string& csv_out) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  SinoModel model = model_from_checkpoint(ck);
  Dataset ds = load_dataset(data_path);
  std::vector<Real> filter;
  if (!scales_csv.empty()) filter = parse_list(scales_csv);
  auto by_scale = group_by_scale(std::move(ds.instances), filter);
  require(!by_scale.empty(), "eval: no instances after the scale filter");

  auto table = evaluate_across_scales(model, by_scale);
  std::cout << "scale  count  mean_rel_l2\n";
  for (const auto& row : table)
    std::cout << row.scale << "  " << row.count << "  " << row.mean_rel_l2
              << "\n";

  std::string path = csv_out.empty() ? data_path + ".eval.csv" : csv_out;
  std::ofstream csv(path);
  if (!csv) throw IoError("eval: cannot write " + path);
  csv << "# ckpt=" << ckpt_path << " data=" << data_path << "\n";
  csv << "scale,count,mean_rel_l2\n";
  for (const auto& row : table)
    csv << row.scale << "," << row.count << "," << row.mean_rel_l2 << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int run_check(const std::string& eq_name, Real lambda, Index res, Index trials,
              Real k, std::uint64_t seed, const std::string& ckpt_path,
              const std::string& out) {
  const Equation eq = equation_from_name(eq_name);
  if (k <= 0.0) {
    k = eq == Equation::Darcy       ? 2.0
        : eq == Equation::Helmholtz ? 8.0
        : eq == Equation::Burgers   ? 100.0
                                    : 1000.0;
  }
  ConsistencyReport solver_report =
      check_solver_consistency(eq, lambda, res, trials, k, seed);

  Json report;
  report["solver_consistency"] = solver_report.to_json();

  if (eq == Equation::Darcy) {
    Operator psi;
    std::string which;
    SinoModel model;
    if (!ckpt_path.empty()) {
      model = model_from_checkpoint(load_checkpoint(ckpt_path));
      psi = model_operator(model);
      which = "model:" + ckpt_path;
    } else {
      psi = exact_darcy_operator();
      which = "exact-solver";
    }
    DiagnosticsReport diag = appendix_diagnostics(psi, lambda, res, trials, seed);
    report["diagnostics"] = diag.to_json();
    report["diagnostics"]["operator"] = which;
  }
  report["seed"] = seed;
  report["k"] = k;

  std::cout << report.dump(2) << "\n";
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw IoError("check-consistency: cannot write " + out);
    os << report.dump(2) << "\n";
  }
  return 0;
}

int run_dd(const std::string& ckpt_path, const std::string& data_path,
           const std::string& patches, Index overlap, Index ramp, Index iters,
           Index max_instances, bool exact_local, const std::string& out) {
  Dataset ds = load_dataset(data_path);
  require(!ds.instances.empty(), "dd: dataset is empty");
  Index nside = 4;
  {
    auto xpos = patches.find('x');
    require(xpos != std::string::npos, "dd: --patches expects NxN");
    nside = std::stol(patches.substr(0, xpos));
    require(nside == std::stol(patches.substr(xpos + 1)),
            "dd: only square patch grids are supported");
  }

  SinoModel model;
  LocalSolver local;
  if (exact_local) {
    local = [](const PdeInstance& p) { return darcy_solve(*p.a, *p.g); };
  } else {
    require(!ckpt_path.empty(), "dd: needs --ckpt or --exact-local");
    model = model_from_checkpoint(load_checkpoint(ckpt_path));
    local = [&model](const PdeInstance& p) {
      MatrixX pred = sino_eval(model, p);
      Field f(p.domain, 1);
      f.values.col(0) = pred.col(0);
      return f;
    };
  }

  const Index n_inst = std::min<Index>(max_instances, ds.instances.size());
  std::vector<Real> mean_err(iters + 1, 0.0);
  for (Index i = 0; i < n_inst; ++i) {
    const PdeInstance& inst = ds.instances[i];
    require(inst.equation == Equation::Darcy && inst.u.has_value(),
            "dd: needs solved Darcy instances");
    PatchPlan plan = make_plan(inst.domain, nside, overlap, ramp);

    Field u0(inst.domain, 1);
    if (!exact_local) {
      MatrixX pred = sino_eval(model, inst);
      u0.values.col(0) = pred.col(0);
    }
    apply_trace(u0, *inst.g);
    mean_err[0] += rel_l2(u0, *inst.u);  // iteration 0: the global estimate

    DdResult r = dd_refine(local, inst, plan, iters, 1, u0, &*inst.u);
    for (Index it = 0; it < iters; ++it) mean_err[it + 1] += r.errors[it];
  }
  for (Real& e : mean_err) e /= static_cast<Real>(n_inst);

  std::cout << "iteration  mean_rel_l2  improvement_vs_global_pct\n";
  for (Index it = 0; it <= iters; ++it) {
    const Real gain = (mean_err[0] - mean_err[it]) / mean_err[0] * 100.0;
    std::cout << it << "  " << mean_err[it] << "  " << (it == 0 ? 0.0 : gain)
              << "\n";
  }
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw IoError("dd: cannot write " + out);
    os << "# ckpt=" << ckpt_path << " data=" << data_path
       << " patches=" << patches << " overlap=" << overlap << " ramp=" << ramp
       << "\n";
    os << "iteration,mean_rel_l2\n";
    for (Index it = 0; it <= iters; ++it)
      os << it << "," << mean_err[it] << "\n";
  }
  return 0;
}

int run_report(const std::string& in, const std::string& out) {
  std::ifstream is(in);
  if (!is) throw IoError("report: cannot open " + in);
  std::vector<Json> records;
  std::vector<std::string> columns;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const std::exception& e) {
      throw IoError(std::string("report: bad record: ") + e.what());
    }
    for (auto it = rec.begin(); it != rec.end(); ++it)
      if (std::find(columns.begin(), columns.end(), it.key()) == columns.end())
        columns.push_back(it.key());
    records.push_back(std::move(rec));
  }
  std::ofstream os(out);
  if (!os) throw IoError("report: cannot write " + out);
  for (size_t c = 0; c < columns.size(); ++c)
    os << columns[c] << (c + 1 < columns.size() ? "," : "\n");
  for (const Json& rec : records) {
    for (size_t c = 0; c < columns.size(); ++c) {
      if (rec.contains(columns[c])) os << rec[columns[c]].dump();
      os << (c + 1 < columns.size() ? "," : "\n");
    }
  }
  std::cout << "wrote " << out << " (" << records.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"scaleop: multi-scale PDE operator toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a dataset");
  std::string g_eq = "darcy", g_scales = "4", g_out = "dataset.mspd";
  Index g_count = 16, g_res = 65, g_nt = 0, g_history = 4;
  std::uint64_t g_seed = 0;
  gen->add_option("--eq", g_eq, "darcy|helmholtz|burgers|ns");
  gen->add_option("--scales", g_scales, "comma-separated scale parameters");
  gen->add_option("--count", g_count, "instances per scale");
  gen->add_option("--res", g_res, "grid resolution per axis");
  gen->add_option("--nt", g_nt, "burgers: time frames (default (res-1)/2)");
  gen->add_option("--history", g_history, "ns: history frames");
  gen->add_option("--seed", g_seed, "master RNG seed");
  gen->add_option("--out", g_out, "output dataset path")->required();

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string t_data, t_arch = "fno", t_aug = "none", t_out = "model.msck";
  TrainConfig t_cfg;
  tr->add_option("--data", t_data, "training dataset")->required();
  tr->add_option("--arch", t_arch, "fno|sino|<json>|@file");
  tr->add_option("--aug", t_aug, "comma list of sub,super,rot,ref");
  tr->add_option("--epochs", t_cfg.epochs, "training epochs");
  tr->add_option("--batch", t_cfg.batch_size, "batch size");
  tr->add_option("--lr", t_cfg.lr, "peak learning rate");
  tr->add_option("--seed", t_cfg.seed, "training seed");
  tr->add_option("--threads", t_cfg.threads, "worker threads (0 = auto)");
  tr->add_option("--min-crop", t_cfg.min_crop, "minimum crop resolution");
  std::string t_lambdas;
  tr->add_option("--lambda-set", t_lambdas, "sub-crop fractions (default 0.5,0.75,1)");
  tr->add_option("--out", t_out, "checkpoint path")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "cross-scale evaluation table");
  std::string e_ckpt, e_data, e_scales, e_csv;
  ev->add_option("--ckpt", e_ckpt, "checkpoint")->required();
  ev->add_option("--data", e_data, "evaluation dataset")->required();
  ev->add_option("--scales", e_scales, "optional scale filter");
  ev->add_option("--csv", e_csv, "CSV output path");

  // check-consistency
  auto* ch = app.add_subcommand("check-consistency",
                                "solver-level scale-consistency and diagnostics");
  std::string c_eq = "darcy", c_ckpt, c_out;
  Real c_lambda = 0.5, c_k = 0.0;
  Index c_res = 129, c_trials = 5;
  std::uint64_t c_seed = 0;
  ch->add_option("--eq", c_eq, "darcy|helmholtz|burgers|ns");
  ch->add_option("--lambda", c_lambda, "crop fraction");
  ch->add_option("--res", c_res, "resolution");
  ch->add_option("--trials", c_trials, "number of random instances");
  ch->add_option("--k", c_k, "scale parameter (default per equation)");
  ch->add_option("--seed", c_seed, "RNG seed");
  ch->add_option("--ckpt", c_ckpt, "model checkpoint for the diagnostics");
  ch->add_option("--out", c_out, "write the JSON report here");

  // dd
  auto* dd = app.add_subcommand("dd", "test-time domain decomposition");
  std::string d_ckpt, d_data, d_patches = "4x4", d_out;
  Index d_overlap = 32, d_ramp = 16, d_iters = 5, d_count = 4;
  bool d_exact = false;
  dd->add_option("--ckpt", d_ckpt, "model checkpoint");
  dd->add_option("--data", d_data, "dataset with reference solutions")->required();
  dd->add_option("--patches", d_patches, "patch grid, e.g. 4x4");
  dd->add_option("--overlap", d_overlap, "overlap in cells");
  dd->add_option("--ramp", d_ramp, "blending ramp in points");
  dd->add_option("--iters", d_iters, "refinement iterations");
  dd->add_option("--count", d_count, "instances to average over");
  dd->add_flag("--exact-local", d_exact, "use the exact solver as local solver");
  dd->add_option("--out", d_out, "CSV output path");

  // report
  auto* rp = app.add_subcommand("report", "convert a metrics stream to CSV");
  std::string r_in, r_out;
  rp->add_option("--in", r_in, "ndjson metrics stream")->required();
  rp->add_option("--out", r_out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      if (g_nt == 0) g_nt = (g_res - 1) / 2;
      return run_gen(g_eq, g_scales, g_count, g_res, g_nt, g_history, g_seed,
                     g_out);
    }
    if (tr->parsed()) {
      if (!t_lambdas.empty()) t_cfg.lambda_set = parse_list(t_lambdas);
      return run_train(t_data, t_arch, t_aug, t_cfg, t_out);
    }
    if (ev->parsed()) return run_eval(e_ckpt, e_data, e_scales, e_csv);
    if (ch->parsed())
      return run_check(c_eq, c_lambda, c_res, c_trials, c_k, c_seed, c_ckpt,
                       c_out);
    if (dd->parsed())
      return run_dd(d_ckpt, d_data, d_patches, d_overlap, d_ramp, d_iters,
                    d_count, d_exact, d_out);
    if (rp->parsed()) return run_report(r_in, r_out);
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
