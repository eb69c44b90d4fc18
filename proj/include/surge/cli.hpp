#pragma once

// Command-line front end. Every subcommand reads and writes fixed file names
// inside --workdir:
//
//   synth        -> stations.csv, truth_offsets.csv
//   ingest       stations.csv -> offsets.csv, excluded.csv
//   cluster      offsets.csv -> clusters.csv, split.csv
//   train        offsets.csv, split.csv -> model.hgan, loss.csv
//   extrapolate  model.hgan, coords.csv -> generated_offsets.csv
//   correct      model.hgan, stations.csv, split.csv -> corrected.csv
//   evaluate     model.hgan, stations.csv, split.csv -> eval.csv
//   bench        model.hgan -> bench.csv
//   sweep        stations.csv, offsets.csv, split.csv -> sweep.csv, sweep_summary.csv

#include "surge/checkpoint.hpp"
#include "surge/geo_cluster.hpp"
#include "surge/inference.hpp"
#include "surge/sweep.hpp"
#include "surge/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace surge::cli {

namespace fs = std::filesystem;

/// Flags shared by the training-related subcommands. Unset flags leave the
/// config-file (or default) value alone.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool fit_on_train = false;
  std::optional<std::size_t> rows, batch_size, layers, neurons, epochs, gen_steps, samples;
  std::optional<double> disc_threshold;
  std::optional<std::string> supervisor_space;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key=value config file; flags override it");
    app.add_option("--seed", seed, "global seed");
    app.add_flag("--fit-on-train", fit_on_train, "normalize test offsets with the train scaler");
    app.add_option("--rows", rows, "matrix rows for the reshape (default: derived from T)");
    app.add_option("--batch-size", batch_size, "stations per batch");
    app.add_option("--layers", layers, "GRU layers in embedder/recovery/generator");
    app.add_option("--neurons", neurons, "GRU hidden width");
    app.add_option("--epochs", epochs, "joint-phase epochs (phases 1 and 2 default to half)");
    app.add_option("--disc-threshold", disc_threshold, "discriminator updates only when its loss exceeds this");
    app.add_option("--gen-steps", gen_steps, "generator updates per discriminator check");
    app.add_option("--samples", samples, "noise draws averaged per generated series");
    app.add_option("--supervisor-space", supervisor_space, "latent or data");
  }

  TrainConfig resolve() const {
    TrainConfig c = config_path.empty() ? TrainConfig{} : load_config_file(config_path);
    if (seed) c.seed = *seed;
    if (fit_on_train) c.fit_on_train = true;
    if (rows) c.rows = *rows;
    if (batch_size) c.batch_size = *batch_size;
    if (layers) c.n_layers = *layers;
    if (neurons) c.hidden = *neurons;
    if (epochs) c.epochs = *epochs;
    if (gen_steps) c.gen_steps_per_disc_check = *gen_steps;
    if (samples) c.noise_draws = *samples;
    if (disc_threshold) c.disc_threshold = *disc_threshold;
    if (supervisor_space) c.supervisor_space = parse_supervisor_space(*supervisor_space);
    c.validate();
    return c;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  fs::path workdir;

  fs::path path(const char* name) const { return workdir / name; }

  fs::path require(const char* name, const char* producer) const {
    const auto p = path(name);
    if (!fs::exists(p)) {
      throw StateError("missing " + p.string() + (producer ? std::string(" (run '") + producer + "' first)" : std::string()));
    }
    return p;
  }

  void log_run(const char* cmd, std::uint64_t seed, const std::optional<TrainConfig>& cfg) const {
    err << "surge-extrap " << cmd << ": seed=" << seed;
    if (cfg) {
      char buf[20];
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(*cfg)));
      err << " config_hash=" << buf;
    }
    err << '\n';
  }
};

template <typename F>
void write_file(const fs::path& p, F&& writer) {
  const auto tmp = fs::path(p.string() + ".tmp");
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw Error("cannot write " + p.string());
    writer(o);
    if (!o) throw Error("failed writing " + p.string());
  }
  fs::rename(tmp, p);
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces

struct SplitData {
  std::vector<OffsetSeries> train, test;
  std::vector<StationSeries> test_stations;  // only when stations were supplied
};

inline SplitData apply_split(const std::vector<OffsetSeries>& offsets, const SplitPlan& plan,
                             const std::vector<StationSeries>* stations = nullptr) {
  const std::set<std::string> train_ids(plan.train_ids.begin(), plan.train_ids.end());
  const std::set<std::string> test_ids(plan.test_ids.begin(), plan.test_ids.end());
  SplitData d;
  std::set<std::string> seen;
  for (const auto& o : offsets) {
    if (train_ids.count(o.station_id)) d.train.push_back(o);
    else if (test_ids.count(o.station_id)) d.test.push_back(o);
    else throw DataError("split file does not assign station " + o.station_id);
    seen.insert(o.station_id);
  }
  for (const auto& id : plan.test_ids) {
    if (!seen.count(id)) throw DataError("split file names test station " + id + " that is not in offsets.csv");
  }
  if (stations) {
    std::map<std::string, const StationSeries*> by_id;
    for (const auto& s : *stations) by_id[s.station_id] = &s;
    for (const auto& id : plan.test_ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("test station " + id + " missing from stations.csv");
      d.test_stations.push_back(*it->second);
    }
  }
  return d;
}

struct ClusterOutput {
  ClusterAssignment assignment;
  SplitPlan plan;
};

inline ClusterOutput cluster_and_split(const std::vector<OffsetSeries>& offsets, std::uint64_t seed) {
  std::vector<GeoPoint> pts;
  std::vector<std::string> ids;
  for (const auto& o : offsets) {
    pts.push_back({o.lon, o.lat});
    ids.push_back(o.station_id);
  }
  ClusterOutput c;
  c.assignment = repair_singletons(pts, kmeans(pts, choose_k(pts.size()), derive_seed(seed, 11)));
  c.plan = make_split(ids, c.assignment, derive_seed(seed, 12));
  return c;
}

/// Pooled test RMSE (with correction) of one config: the sweep objective.
inline double train_and_score(const SplitData& d, const TrainConfig& c) {
  const auto b = train_bundle(d.train, d.test, c);
  return evaluate_stations(b, d.test_stations, c.seed, c.noise_draws).pooled_rmse_with_ai;
}

inline std::vector<std::size_t> parse_list(const std::string& s, const char* what) {
  std::vector<std::size_t> v;
  for (const auto& f : csv::split(s)) v.push_back(detail::parse_u64(what, csv::trim(f)));
  if (v.empty()) throw DataError(std::string(what) + ": empty list");
  return v;
}

// ---------------------------------------------------------------------------

/// Runs one invocation. Returns the process exit status; failures print a
/// single `error: <kind>: <message>` line on `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Coordinate-conditioned water-level offset extrapolation", "surge-extrap"};
  app.require_subcommand(1, 1);
  std::string workdir = ".";
  app.add_option("--workdir", workdir, "directory holding every input and output file");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic hurricane (stations.csv, truth_offsets.csv)");
  FieldSpec field;
  synth->add_option("--n-stations", field.n_stations, "number of stations");
  synth->add_option("--hours", field.T, "series length T in hours");
  synth->add_option("--noise", field.noise_ft, "offset noise sigma (ft)");
  synth->add_option("--outlier-rate", field.outlier_rate, "fraction of stations given a spike");
  synth->add_option("--seed", field.seed, "generator seed");

  auto* ingest = app.add_subcommand("ingest", "screen stations, compute offsets, drop outlier stations");
  std::string stations_in;
  ingest->add_option("--stations", stations_in, "station CSV (default: <workdir>/stations.csv)");

  auto* cluster = app.add_subcommand("cluster", "k-means on coordinates and one test station per cluster");
  std::uint64_t cluster_seed = 42;
  cluster->add_option("--seed", cluster_seed, "clustering/split seed");

  auto* train = app.add_subcommand("train", "three-phase training on the train split");
  ConfigFlags train_flags;
  train_flags.attach(*train);

  auto* extrap = app.add_subcommand("extrapolate", "generate offsets at coordinates from coords.csv (lon_deg,lat_deg)");
  ConfigFlags extrap_flags;
  extrap->add_option("--seed", extrap_flags.seed, "noise seed (default: the training seed)");
  extrap->add_option("--samples", extrap_flags.samples, "noise draws averaged per series");

  auto* correct = app.add_subcommand("correct", "subtract generated offsets from modeled levels at test stations");
  ConfigFlags correct_flags;
  correct->add_option("--seed", correct_flags.seed, "noise seed (default: the training seed)");
  correct->add_option("--samples", correct_flags.samples, "noise draws averaged per series");

  auto* evaluate = app.add_subcommand("evaluate", "per-station RMSE with and without correction");
  ConfigFlags eval_flags;
  evaluate->add_option("--seed", eval_flags.seed, "noise seed (default: the training seed)");
  evaluate->add_option("--samples", eval_flags.samples, "noise draws averaged per series");

  auto* bench = app.add_subcommand("bench", "sequential inference timing");
  std::string counts = "10,100,1000";
  std::uint64_t bench_seed = 42;
  bench->add_option("--counts", counts, "ascending comma-separated series counts");
  bench->add_option("--seed", bench_seed, "coordinate/noise seed");

  auto* sweep = app.add_subcommand("sweep", "grid search over layers x neurons x epochs");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep);
  std::string grid_layers = "4,5", grid_neurons = "128,256", grid_epochs = "2000,3000,4000";
  sweep->add_option("--grid-layers", grid_layers, "comma-separated layer counts");
  sweep->add_option("--grid-neurons", grid_neurons, "comma-separated hidden widths");
  sweep->add_option("--grid-epochs", grid_epochs, "comma-separated joint epoch counts");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    err << "error: usage: " << msg << '\n';
    return 2;
  }

  Context ctx{out, err, fs::path(workdir)};
  try {
    if (!fs::is_directory(ctx.workdir)) throw DataError("workdir " + workdir + " is not a directory");

    if (synth->parsed()) {
      ctx.log_run("synth", field.seed, std::nullopt);
      const auto d = generate_dataset(field);
      write_file(ctx.path("stations.csv"), [&](std::ostream& o) { write_station_csv(o, d.stations); });
      write_file(ctx.path("truth_offsets.csv"), [&](std::ostream& o) { write_offsets_csv(o, d.truth); });
      out << "wrote " << d.stations.size() << " stations (" << d.outlier_ids.size() << " with injected spikes)\n";
    } else if (ingest->parsed()) {
      ctx.log_run("ingest", 0, std::nullopt);
      const fs::path in = stations_in.empty() ? ctx.require("stations.csv", "synth") : fs::path(stations_in);
      const auto stations = read_station_csv_file(in.string());
      std::vector<OffsetSeries> offsets;
      std::vector<std::pair<std::string, std::string>> excluded;
      for (const auto& s : stations) {
        if (auto why = screen_station(s)) {
          excluded.emplace_back(s.station_id, *why);
        } else {
          offsets.push_back(compute_offsets(s));
        }
      }
      if (offsets.empty()) throw DataError("ingest: no complete stations");
      const auto filtered = filter_outlier_stations(offsets);
      for (const auto& r : filtered.removed) excluded.emplace_back(r.station_id, r.reason());
      const auto summary = validate_dataset(filtered.kept);
      for (const auto& w : summary.warnings) err << "warning: " << w << '\n';
      write_file(ctx.path("offsets.csv"), [&](std::ostream& o) { write_offsets_csv(o, filtered.kept); });
      write_file(ctx.path("excluded.csv"), [&](std::ostream& o) {
        csv::write_header(o, {"station_id", "reason"});
        for (const auto& [id, why] : excluded) o << id << ',' << why << '\n';
      });
      out << "kept " << filtered.kept.size() << " stations, excluded " << excluded.size() << '\n';
    } else if (cluster->parsed()) {
      ctx.log_run("cluster", cluster_seed, std::nullopt);
      const auto offsets = read_offsets_csv_file(ctx.require("offsets.csv", "ingest").string());
      const auto c = cluster_and_split(offsets, cluster_seed);
      std::vector<std::string> ids;
      for (const auto& o : offsets) ids.push_back(o.station_id);
      write_file(ctx.path("clusters.csv"), [&](std::ostream& o) { write_clusters_csv(o, ids, c.assignment); });
      write_file(ctx.path("split.csv"), [&](std::ostream& o) { write_split_csv(o, c.plan); });
      out << c.assignment.k << " clusters, " << c.plan.train_ids.size() << " train / " << c.plan.test_ids.size()
          << " test stations\n";
    } else if (train->parsed()) {
      const auto cfg = train_flags.resolve();
      ctx.log_run("train", cfg.seed, cfg);
      const auto offsets = read_offsets_csv_file(ctx.require("offsets.csv", "ingest").string());
      std::ifstream split_in(ctx.require("split.csv", "cluster"));
      const auto plan = read_split_csv(split_in, ctx.path("split.csv").string());
      const auto d = apply_split(offsets, plan);
      const auto b = train_bundle(d.train, d.test, cfg);
      save_bundle(b, ctx.path("model.hgan").string());
      write_file(ctx.path("loss.csv"), [&](std::ostream& o) { write_loss_csv(o, b.history); });
      out << "trained on " << d.train.size() << " stations; rows=" << b.rows << " cols=" << b.cols << '\n';
    } else if (extrap->parsed() || correct->parsed() || evaluate->parsed()) {
      const auto b = load_bundle(ctx.require("model.hgan", "train").string());
      const ConfigFlags& f = extrap->parsed() ? extrap_flags : correct->parsed() ? correct_flags : eval_flags;
      const std::uint64_t seed = f.seed.value_or(b.config.seed);
      const std::size_t draws = f.samples.value_or(b.config.noise_draws);
      ctx.log_run(extrap->parsed() ? "extrapolate" : correct->parsed() ? "correct" : "evaluate", seed, b.config);
      if (extrap->parsed()) {
        const auto table = csv::Table::read_file(ctx.require("coords.csv", nullptr).string(), {"lon_deg", "lat_deg"});
        ExtrapolationRequest req;
        req.seed = seed;
        req.n_noise_draws = draws;
        for (const auto& row : table.rows()) req.coords.push_back({table.required_number(row, 0), table.required_number(row, 1)});
        const auto res = extrapolate(b, req);
        for (const auto& w : res.warnings) err << "warning: " << w << '\n';
        write_file(ctx.path("generated_offsets.csv"), [&](std::ostream& o) { write_generated_csv(o, res); });
        out << "generated " << res.series.size() << " series\n";
      } else {
        const auto stations = read_station_csv_file(ctx.require("stations.csv", "synth").string());
        const auto offsets = read_offsets_csv_file(ctx.require("offsets.csv", "ingest").string());
        std::ifstream split_in(ctx.require("split.csv", "cluster"));
        const auto d = apply_split(offsets, read_split_csv(split_in, ctx.path("split.csv").string()), &stations);
        const auto report = evaluate_stations(b, d.test_stations, seed, draws);
        if (correct->parsed()) {
          write_file(ctx.path("corrected.csv"), [&](std::ostream& o) { write_corrected_csv(o, report); });
          out << "corrected " << report.stations.size() << " test stations\n";
        } else {
          write_file(ctx.path("eval.csv"), [&](std::ostream& o) { write_eval_csv(o, report); });
          out << "pooled RMSE without/with correction: " << csv::fmt(report.pooled_rmse_without_ai) << " / "
              << csv::fmt(report.pooled_rmse_with_ai) << " ft; improved " << csv::fmt(report.improved_fraction) << '\n';
        }
      }
    } else if (bench->parsed()) {
      ctx.log_run("bench", bench_seed, std::nullopt);
      const auto b = load_bundle(ctx.require("model.hgan", "train").string());
      const auto rows = bench_inference(b, parse_list(counts, "--counts"), bench_seed);
      write_file(ctx.path("bench.csv"), [&](std::ostream& o) { write_bench_csv(o, rows); });
      for (const auto& r : rows) out << r.n << " series: " << csv::fmt(r.seconds) << " s\n";
    } else if (sweep->parsed()) {
      const auto base = sweep_flags.resolve();
      ctx.log_run("sweep", base.seed, base);
      SweepGrid grid{parse_list(grid_layers, "--grid-layers"), parse_list(grid_neurons, "--grid-neurons"),
                     parse_list(grid_epochs, "--grid-epochs"), base.seed};
      const auto stations = read_station_csv_file(ctx.require("stations.csv", "synth").string());
      const auto offsets = read_offsets_csv_file(ctx.require("offsets.csv", "ingest").string());
      std::ifstream split_in(ctx.require("split.csv", "cluster"));
      const auto d = apply_split(offsets, read_split_csv(split_in, ctx.path("split.csv").string()), &stations);
      const auto res = run_sweep(grid, base, [&](const TrainConfig& c) { return train_and_score(d, c); });
      for (const auto& w : res.warnings) err << "warning: " << w << '\n';
      write_file(ctx.path("sweep.csv"), [&](std::ostream& o) { write_sweep_csv(o, res); });
      const auto ok = res.successful();
      if (ok.size() >= 2) {
        const auto s = summarize(ok);
        write_file(ctx.path("sweep_summary.csv"), [&](std::ostream& o) { write_sweep_summary_csv(o, s); });
      } else {
        err << "warning: fewer than two successful configs; sweep_summary.csv not written\n";
      }
      if (const auto* w = res.winner()) {
        out << "best: layers=" << w->layers << " neurons=" << w->neurons << " epochs=" << w->epochs
            << " rmse_ft=" << csv::fmt(w->rmse_ft) << '\n';
      }
    }
  } catch (const std::exception& e) {
    const char* kind = dynamic_cast<const FormatError*>(&e)      ? "format"
                       : dynamic_cast<const DataError*>(&e)      ? "data"
                       : dynamic_cast<const StateError*>(&e)     ? "precondition"
                       : dynamic_cast<const DimensionError*>(&e) ? "dimension"
                       : dynamic_cast<const TrainingAborted*>(&e) ? "training"
                                                                 : "runtime";
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    err << "error: " << kind << ": " << msg << '\n';
    return 1;
  }
  return 0;
}

}  // namespace surge::cli
