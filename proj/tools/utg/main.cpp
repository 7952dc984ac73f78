// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "run_config.hpp"
#include "utg/data/house_sales.hpp"
#include "utg/data/images.hpp"
#include "utg/data/tabular.hpp"
#include "utg/models/pixelcnn.hpp"
#include "utg/models/vae.hpp"
#include "utg/models/vqvae.hpp"
#include "utg/nn/model_file.hpp"
#include "utg/nn/tensor.hpp"
#include "utg/pipeline/generate.hpp"
#include "utg/pipeline/records.hpp"
#include "utg/pipeline/sweep.hpp"
#include "utg/service/http_api.hpp"
#include "utg/service/session_store.hpp"

namespace fs = std::filesystem;
namespace data = utg::data;
namespace models = utg::models;
namespace pipeline = utg::pipeline;
namespace rare = utg::rare;
namespace service = utg::service;
namespace cli = utg::cli;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const long v = std::stol(item);
    if (v <= 0) throw std::invalid_argument("layer widths must be positive: '" + s + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

fs::path sidecar(const fs::path& out, const std::string& suffix) { return fs::path(out.string() + suffix); }

std::vector<double> linear_grid(double from, double to, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("--steps must be >= 1");
  if (steps == 1) return {from};
  std::vector<double> g(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double v = from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
    // Snap away interpolation error so 1.0..0.2 gives exactly 0.4, not 0.39999999999999991.
    g[i] = std::round(v * 1e12) / 1e12;
  }
  g.front() = from;
  g.back() = to;
  return g;
}

struct TrainVaeArgs {
  std::string data, schema, out, hidden = "64,64";
  models::VaeConfig cfg;
};

struct TrainVqArgs {
  std::string images, labels, out, maps_out;
  std::size_t limit = 0;
  models::VqVaeConfig cfg;
};

struct TrainPriorArgs {
  std::string vq, maps, out;
  models::PriorConfig cfg;
};

struct GenerateArgs {
  std::string model, vq, prior, out, sampler = "metropolis";
  double mu_u = 0.0, sigma_u = 1.0, t = 1.0;
  std::size_t n = 100, grid_columns = 10;
  std::uint64_t seed = 0;
};

struct SweepArgs {
  std::string param, model, vq, prior, out, sampler = "metropolis";
  double from = 1.0, to = 0.2, base_mu = 5.0, base_sigma = 5.0;
  std::size_t steps = 5, n = 100, strip_samples = 10;
  std::uint64_t seed = 0;
};

struct ServeArgs {
  std::string host = "127.0.0.1", store;
  int port = 8080;
};

struct IngestArgs {
  std::string data, schema, images, labels, out;
};

struct ExportArgs {
  std::string in, csv, schema, png_dir, grid, store, session, out;
  std::size_t grid_columns = 10;
};

struct SynthArgs {
  std::string out, schema_out;
  std::size_t n = 2000;
  std::uint64_t seed = 1;
};

int run_train_vae(const TrainVaeArgs& a, const json& resolved) {
  auto schema = data::load_schema(a.schema);
  auto ds = data::load_csv(a.data, schema);
  models::VaeConfig cfg = a.cfg;
  cfg.encoder_hidden = cfg.decoder_hidden = parse_widths(a.hidden);
  auto result = models::train_vae(ds, cfg);
  result.model.metadata() = {{"data", absolute(a.data)}, {"schema", absolute(a.schema)}};
  result.model.save(a.out);
  write_json(sidecar(a.out, ".loss.json"), {{"loss_history", result.loss_history}});
  cli::write_run_config(sidecar(a.out, ".run.json"), resolved);
  std::cout << "trained VAE on " << ds.size() << " rows: loss " << result.loss_history.front() << " -> "
            << result.loss_history.back() << "\nwrote " << a.out << "\n";
  return kExitOk;
}

int run_train_vqvae(const TrainVqArgs& a, const json& resolved) {
  auto ds = data::load_idx(a.images, a.labels.empty() ? std::nullopt : std::optional<fs::path>(a.labels));
  if (a.limit > 0) ds = ds.head(a.limit);
  auto result = models::train_vqvae(ds, a.cfg);
  json meta = {{"images", absolute(a.images)}};
  if (a.limit > 0) meta["limit"] = ds.count;
  result.model.metadata() = meta;
  result.model.save(a.out);
  json hist = json::array();
  for (const auto& e : result.loss_history) {
    hist.push_back({{"recon", e.recon}, {"codebook", e.codebook}, {"commitment", e.commitment}, {"total", e.total}});
  }
  write_json(sidecar(a.out, ".loss.json"),
             {{"loss_history", hist}, {"usage", result.usage}, {"warnings", result.warnings}});
  cli::write_run_config(sidecar(a.out, ".run.json"), resolved);
  if (!a.maps_out.empty()) models::write_map_cache(a.maps_out, models::encode_dataset_maps(result.model, ds));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "trained VQ-VAE on " << ds.count << " images: recon " << result.loss_history.front().recon << " -> "
            << result.loss_history.back().recon << "\nwrote " << a.out << "\n";
  return kExitOk;
}

int run_train_prior(const TrainPriorArgs& a, const json& resolved) {
  auto vq = models::VqVaeModel::load(a.vq);
  std::vector<models::DiscreteLatentMap> maps;
  if (!a.maps.empty()) {
    maps = models::read_map_cache(a.maps);
  } else {
    const auto& meta = vq.metadata();
    if (!meta.contains("images")) throw std::runtime_error("VQ-VAE model does not record its training images; pass --maps");
    auto ds = data::load_idx(meta.at("images").get<std::string>());
    if (meta.contains("limit")) ds = ds.head(meta.at("limit").get<std::size_t>());
    maps = models::encode_dataset_maps(vq, ds);
  }
  models::PriorConfig cfg = a.cfg;
  cfg.codebook_size = vq.config().codebook_size;
  auto result = models::train_prior(maps, cfg);
  result.model.metadata() = {{"vqvae", absolute(a.vq)}};
  result.model.save(a.out);
  write_json(sidecar(a.out, ".loss.json"), {{"loss_history", result.loss_history}});
  cli::write_run_config(sidecar(a.out, ".run.json"), resolved);
  std::cout << "trained prior on " << maps.size() << " maps: loss " << result.loss_history.front() << " -> "
            << result.loss_history.back() << "\nwrote " << a.out << "\n";
  return kExitOk;
}

rare::Sampler parse_sampler(const std::string& s) {
  if (s == "metropolis") return rare::Sampler::kMetropolis;
  if (s == "exact") return rare::Sampler::kExact;
  throw std::invalid_argument("unknown sampler '" + s + "' (metropolis|exact)");
}

int run_generate(const GenerateArgs& a, const json& resolved) {
  fs::create_directories(a.out);
  const fs::path out(a.out);
  if (!a.model.empty()) {
    auto model = models::VaeModel::load(a.model);
    auto reference = pipeline::reference_from_metadata(model);
    auto records = pipeline::generate_lu_tabular(model, reference, {a.mu_u, a.sigma_u}, a.n, a.seed,
                                                 parse_sampler(a.sampler), fs::path(a.model).filename().string());
    pipeline::write_jsonl(out / "records.jsonl", records);
    pipeline::write_csv_projection(out / "records.csv", model.codec()->schema(), records);
  } else {
    if (a.vq.empty() || a.prior.empty()) throw std::invalid_argument("pass --model, or both --vq and --prior");
    auto vq = models::VqVaeModel::load(a.vq);
    auto prior = models::PriorModel::load(a.prior);
    pipeline::check_compatible(vq, prior);
    auto reference = pipeline::reference_from_metadata(vq);
    auto records = pipeline::generate_lu_images(vq, prior, reference, {a.t}, a.n, a.seed,
                                                fs::path(a.vq).filename().string() + "+" +
                                                    fs::path(a.prior).filename().string());
    pipeline::write_image_records(out, records);
    if (!records.empty()) pipeline::write_image_grid(out / "grid.png", records, a.grid_columns);
  }
  cli::write_run_config(out / "run.json", resolved);
  std::cout << "wrote " << a.n << " records to " << a.out << "\n";
  return kExitOk;
}

int run_sweep(const SweepArgs& a, const json& resolved) {
  const auto grid = linear_grid(a.from, a.to, a.steps);
  pipeline::check_grid(grid);
  const fs::path out(a.out);
  fs::create_directories(out);
  pipeline::SweepReport report;
  if (a.param == "s") {
    if (a.model.empty()) throw std::invalid_argument("--param s needs --model");
    auto model = models::VaeModel::load(a.model);
    auto reference = pipeline::reference_from_metadata(model);
    report = pipeline::sweep_rarity(model, reference, {a.base_mu, a.base_sigma}, grid, a.n, a.seed,
                                    parse_sampler(a.sampler), fs::path(a.model).filename().string());
    for (std::size_t i = 0; i < report.points.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "point-%02zu", i);
      fs::create_directories(out / name);
      pipeline::write_jsonl(out / name / "records.jsonl", report.points[i].records);
      pipeline::write_csv_projection(out / name / "records.csv", model.codec()->schema(), report.points[i].records);
    }
  } else if (a.param == "t") {
    if (a.vq.empty() || a.prior.empty()) throw std::invalid_argument("--param t needs --vq and --prior");
    auto vq = models::VqVaeModel::load(a.vq);
    auto prior = models::PriorModel::load(a.prior);
    auto reference = pipeline::reference_from_metadata(vq);
    report = pipeline::sweep_threshold(vq, prior, reference, grid, a.n, a.seed,
                                       fs::path(a.vq).filename().string() + "+" + fs::path(a.prior).filename().string());
    for (std::size_t i = 0; i < report.points.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "point-%02zu", i);
      pipeline::write_image_records(out / name, report.points[i].records);
    }
    if (a.n > 0) data::write_png(out / "strip.png", pipeline::sweep_strip(report, a.strip_samples));
  } else {
    throw std::invalid_argument("--param must be 's' or 't'");
  }
  write_json(out / "summary.json", report.summary());
  cli::write_run_config(out / "run.json", resolved);
  std::cout << "swept " << a.param << " over " << grid.size() << " points into " << a.out << "\n";
  return kExitOk;
}

int run_serve(const ServeArgs& a) {
  // Signals are handled by a dedicated thread; block them everywhere else.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  service::SessionStore store(a.store);
  service::HttpServer server(store);
  const int port = server.bind(a.host, a.port);
  if (port < 0) {
    std::cerr << "utg: error: cannot listen on " << a.host << ":" << a.port << " (port in use?)\n";
    return kExitError;
  }
  std::cout << "listening on http://" << a.host << ":" << port << " (store " << store.root().string() << ")"
            << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  const bool ok = server.listen();
  // Wake the waiter if listen() returned on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cout << "stopped; sessions are stored in " << store.root().string() << std::endl;
  return ok ? kExitOk : kExitError;
}

int run_ingest(const IngestArgs& a) {
  json report;
  if (!a.data.empty()) {
    if (a.schema.empty()) throw std::invalid_argument("--data needs --schema");
    auto ds = data::load_csv(a.data, data::load_schema(a.schema));
    report = {{"kind", "table"}, {"rows", ds.size()}, {"columns", ds.schema.names()},
              {"mean", ds.norm_stats.mean}, {"stddev", ds.norm_stats.stddev}};
  } else if (!a.images.empty()) {
    auto ds = data::load_idx(a.images, a.labels.empty() ? std::nullopt : std::optional<fs::path>(a.labels));
    report = {{"kind", "images"}, {"count", ds.count}, {"height", ds.height}, {"width", ds.width},
              {"labels", !ds.labels.empty()}};
  } else {
    throw std::invalid_argument("pass --data/--schema or --images");
  }
  if (!a.out.empty()) write_json(a.out, report);
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

int run_export(const ExportArgs& a) {
  if (!a.session.empty()) {
    if (a.out.empty()) throw std::invalid_argument("--session needs --out");
    service::SessionStore store(a.store);
    const std::string text = store.export_session(a.session);
    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + a.out);
    os << text;
    std::cout << "exported session " << a.session << " to " << a.out << "\n";
    return kExitOk;
  }
  if (a.in.empty()) throw std::invalid_argument("pass --in records.jsonl or --session");
  auto records = pipeline::read_jsonl(a.in);
  if (!a.csv.empty()) {
    if (a.schema.empty()) throw std::invalid_argument("--csv needs --schema");
    pipeline::write_csv_projection(a.csv, data::load_schema(a.schema), records);
  }
  if (!a.png_dir.empty()) pipeline::write_image_records(a.png_dir, records);
  if (!a.grid.empty()) pipeline::write_image_grid(a.grid, records, a.grid_columns);
  std::cout << "exported " << records.size() << " records\n";
  return kExitOk;
}

int run_synth(const SynthArgs& a) {
  auto ds = data::synth_house_sales(a.n, a.seed);
  data::write_csv(a.out, ds.schema, ds.rows);
  if (!a.schema_out.empty()) write_json(a.schema_out, data::schema_to_json(ds.schema));
  std::cout << "wrote " << ds.size() << " synthetic rows to " << a.out << "\n";
  return kExitOk;
}

std::string default_store() {
  const char* env = std::getenv("UTG_STORE");
  return env && *env ? env : "sessions";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupposable test-data generation toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto add_config = [](CLI::App* cmd) {
    cmd->add_option("--config", "JSON file of option values; command-line flags override it");
  };

  // train
  auto* train = app.add_subcommand("train", "Train a model")->require_subcommand(1);

  TrainVaeArgs tv;
  auto* train_vae = train->add_subcommand("vae", "Train the tabular VAE");
  add_config(train_vae);
  train_vae->add_option("--data", tv.data, "Training CSV")->required();
  train_vae->add_option("--schema", tv.schema, "Schema JSON")->required();
  train_vae->add_option("--latent-dim", tv.cfg.latent_dim, "Latent dimension K");
  train_vae->add_option("--hidden", tv.hidden, "Hidden widths, comma-separated");
  train_vae->add_option("--epochs", tv.cfg.epochs);
  train_vae->add_option("--batch-size", tv.cfg.batch_size);
  train_vae->add_option("--lr", tv.cfg.learning_rate);
  train_vae->add_option("--seed", tv.cfg.seed);
  train_vae->add_option("--out", tv.out, "Model file")->required();

  TrainVqArgs tq;
  auto* train_vq = train->add_subcommand("vqvae", "Train the image VQ-VAE");
  add_config(train_vq);
  train_vq->add_option("--images", tq.images, "IDX image file")->required();
  train_vq->add_option("--labels", tq.labels, "IDX label file");
  train_vq->add_option("--limit", tq.limit, "Use only the first N images (0 = all)");
  train_vq->add_option("--codebook-size", tq.cfg.codebook_size, "Codebook entries V");
  train_vq->add_option("--code-dim", tq.cfg.code_dim, "Code vector dimension K");
  train_vq->add_option("--beta", tq.cfg.beta, "Commitment weight");
  train_vq->add_option("--epochs", tq.cfg.epochs);
  train_vq->add_option("--batch-size", tq.cfg.batch_size);
  train_vq->add_option("--lr", tq.cfg.learning_rate);
  train_vq->add_option("--seed", tq.cfg.seed);
  train_vq->add_option("--out", tq.out, "Model file")->required();
  train_vq->add_option("--maps-out", tq.maps_out, "Write the training set's latent maps here");

  TrainPriorArgs tp;
  auto* train_prior = train->add_subcommand("prior", "Train the PixelCNN prior over latent maps");
  add_config(train_prior);
  train_prior->add_option("--vq", tp.vq, "Trained VQ-VAE model")->required();
  train_prior->add_option("--maps", tp.maps, "Latent-map cache (default: encode the VQ-VAE's training images)");
  train_prior->add_option("--channels", tp.cfg.channels);
  train_prior->add_option("--layers", tp.cfg.hidden_layers, "Hidden mask-B layers");
  train_prior->add_option("--epochs", tp.cfg.epochs);
  train_prior->add_option("--batch-size", tp.cfg.batch_size);
  train_prior->add_option("--lr", tp.cfg.learning_rate);
  train_prior->add_option("--seed", tp.cfg.seed);
  train_prior->add_option("--out", tp.out, "Model file")->required();

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate likely-unsupposable records");
  add_config(gen);
  gen->add_option("--model", ga.model, "Trained VAE (tabular path)");
  gen->add_option("--vq", ga.vq, "Trained VQ-VAE (image path)");
  gen->add_option("--prior", ga.prior, "Trained prior (image path)");
  gen->add_option("--mu-u", ga.mu_u);
  gen->add_option("--sigma-u", ga.sigma_u);
  gen->add_option("--t", ga.t, "Threshold in (0, 1]");
  gen->add_option("--sampler", ga.sampler, "metropolis or exact");
  gen->add_option("--n", ga.n);
  gen->add_option("--seed", ga.seed);
  gen->add_option("--grid-columns", ga.grid_columns);
  gen->add_option("--out", ga.out, "Output directory")->required();

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Generate over a grid of parameter values");
  add_config(sweep);
  sweep->add_option("--param", sa.param, "s (rarity ray) or t (threshold)")->required();
  sweep->add_option("--from", sa.from);
  sweep->add_option("--to", sa.to);
  sweep->add_option("--steps", sa.steps);
  sweep->add_option("--model", sa.model);
  sweep->add_option("--vq", sa.vq);
  sweep->add_option("--prior", sa.prior);
  sweep->add_option("--base-mu", sa.base_mu, "Ray direction mu_u");
  sweep->add_option("--base-sigma", sa.base_sigma, "Ray direction sigma_u");
  sweep->add_option("--sampler", sa.sampler);
  sweep->add_option("--n", sa.n);
  sweep->add_option("--seed", sa.seed);
  sweep->add_option("--strip-samples", sa.strip_samples);
  sweep->add_option("--out", sa.out, "Output directory")->required();

  ServeArgs sv;
  sv.store = default_store();
  auto* serve = app.add_subcommand("serve", "Serve the session HTTP API");
  add_config(serve);
  serve->add_option("--host", sv.host);
  serve->add_option("--port", sv.port, "0 picks a free port");
  serve->add_option("--store", sv.store, "Session directory (default $UTG_STORE or ./sessions)");

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and report its statistics");
  add_config(ingest);
  ingest->add_option("--data", ia.data);
  ingest->add_option("--schema", ia.schema);
  ingest->add_option("--images", ia.images);
  ingest->add_option("--labels", ia.labels);
  ingest->add_option("--out", ia.out, "Write the report as JSON");

  ExportArgs ea;
  ea.store = default_store();
  auto* exp = app.add_subcommand("export", "Convert records or export a session");
  add_config(exp);
  exp->add_option("--in", ea.in, "Records JSONL");
  exp->add_option("--csv", ea.csv);
  exp->add_option("--schema", ea.schema);
  exp->add_option("--png-dir", ea.png_dir);
  exp->add_option("--grid", ea.grid);
  exp->add_option("--grid-columns", ea.grid_columns);
  exp->add_option("--store", ea.store);
  exp->add_option("--session", ea.session);
  exp->add_option("--out", ea.out);

  SynthArgs ya;
  auto* synth = app.add_subcommand("synth", "Write synthetic datasets")->require_subcommand(1);
  auto* synth_houses = synth->add_subcommand("houses", "Synthetic House-Sales stand-in");
  add_config(synth_houses);
  synth_houses->add_option("--n", ya.n);
  synth_houses->add_option("--seed", ya.seed);
  synth_houses->add_option("--out", ya.out, "CSV file")->required();
  synth_houses->add_option("--schema-out", ya.schema_out, "Also write the schema JSON");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = utg::cli::expand_config_args(args);
  } catch (const std::exception& e) {
    std::cerr << "utg: error: " << e.what() << "\n";
    return kExitError;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train_vae->parsed()) return run_train_vae(tv, utg::cli::resolved_config(*train_vae, "train vae"));
    if (train_vq->parsed()) return run_train_vqvae(tq, utg::cli::resolved_config(*train_vq, "train vqvae"));
    if (train_prior->parsed()) return run_train_prior(tp, utg::cli::resolved_config(*train_prior, "train prior"));
    if (gen->parsed()) return run_generate(ga, utg::cli::resolved_config(*gen, "generate"));
    if (sweep->parsed()) return run_sweep(sa, utg::cli::resolved_config(*sweep, "sweep"));
    if (serve->parsed()) return run_serve(sv);
    if (ingest->parsed()) return run_ingest(ia);
    if (exp->parsed()) return run_export(ea);
    if (synth_houses->parsed()) return run_synth(ya);
  } catch (const utg::nn::DivergenceError& e) {
    std::cerr << "utg: training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "utg: error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
