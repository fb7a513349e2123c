#include "touchdigits/cli/cli.hpp"

#include <csignal>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "touchdigits/data/dataset.hpp"
#include "touchdigits/data/split.hpp"
#include "touchdigits/data/stats.hpp"
#include "touchdigits/data/synth.hpp"
#include "touchdigits/models/models.hpp"
#include "touchdigits/serve/service.hpp"
#include "touchdigits/train/evaluate.hpp"
#include "touchdigits/train/experiments.hpp"
#include "touchdigits/train/trainer.hpp"
#include "touchdigits/util/error.hpp"
#include "touchdigits/util/image.hpp"

namespace touchdigits::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class AuditFailed : public Error {
 public:
  explicit AuditFailed(const std::string& message) : Error("audit_failed", message) {}
};

struct Options {
  std::string model = "polar1d";
  std::string input = "both";
  std::string dataset;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 1;
  double lr = 0.01;
  double momentum = 0.9;
  double decay = 0.95;
  std::size_t batch = 64;
  std::optional<std::size_t> max_epochs;
  std::size_t patience = 18;
  std::string early_stopping = "auto";
  bool nesterov = false;
  std::string out = "runs";
  std::string synth_out;
  std::string bind = "127.0.0.1:8080";
  std::vector<std::string> checkpoints;
  std::string fractions = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  std::string bucket = "test";
  std::string request = "-";
  std::string static_dir;
  std::string noise = "default";
  std::size_t count = 1000;
  std::size_t k = 16;
};

// --- shared helpers --------------------------------------------------------

void emit(const json& j) { std::cout << j.dump() << std::endl; }

void print_config(const std::string& command, const json& config) {
  emit({{"command", command}, {"config", config}});
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

// <out>/<command>-<UTC timestamp>-seed<seed>, suffixed -2, -3, ... when taken.
fs::path make_run_dir(const std::string& out, const std::string& command, std::uint64_t seed) {
  const std::string base = command + "-" + utc_timestamp() + "-seed" + std::to_string(seed);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out + ": " + ec.message());
  for (int n = 1;; ++n) {
    const fs::path dir = fs::path(out) / (n == 1 ? base : base + "-" + std::to_string(n));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("cannot write " + path.string());
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("--fractions: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw InvalidArgument("--fractions is empty");
  return out;
}

data::Dataset load(const Options& o) {
  if (o.dataset.empty()) throw InvalidArgument("--dataset is required");
  return data::load_dataset(o.dataset);
}

std::vector<data::Glyph> select_bucket(const data::Dataset& d, const Options& o) {
  if (o.bucket == "all") return d.glyphs;
  auto parts = data::apply_split(d, data::split(d, o.split_seed));
  if (o.bucket == "train") return parts.train;
  if (o.bucket == "validation") return parts.validation;
  return parts.test;
}

nn::Checkpoint single_checkpoint(const Options& o) {
  if (o.checkpoints.size() != 1) throw InvalidArgument("exactly one --checkpoint is required");
  return nn::load_checkpoint(o.checkpoints.front());
}

train::TrainConfig train_config(const Options& o) {
  train::TrainConfig c;
  c.model = o.model;
  c.input_mode = o.input;
  c.base_learning_rate = o.lr;
  c.momentum = o.momentum;
  c.decay_rate = o.decay;
  c.batch_size = o.batch;
  c.max_epochs = o.max_epochs;
  c.patience = o.patience;
  if (o.early_stopping != "auto") c.early_stopping = o.early_stopping == "on";
  c.nesterov = o.nesterov;
  c.seed = o.seed;
  c.split_seed = o.split_seed;
  c.dataset = o.dataset;
  return c.resolved();
}

train::TrainCallbacks progress(const std::string& prefix) {
  return {[prefix](const train::HistoryRow& r) {
    std::cerr << prefix << "epoch " << r.epoch << " loss " << std::setprecision(5) << r.train_loss << " val "
              << r.val_accuracy << " lr " << r.lr_eff << std::endl;
  }};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- subcommands -------------------------------------------------------------

int cmd_synth(const Options& o) {
  if (o.count < 1) throw InvalidArgument("--count must be at least 1");
  print_config("synth", {{"count", o.count}, {"seed", o.seed}, {"noise", o.noise}, {"out", o.synth_out}});
  const auto profile = o.noise == "zero" ? data::NoiseProfile::zero() : data::NoiseProfile{};
  const auto d = data::synth_generate(o.count, o.seed, profile);
  data::save_dataset(d, o.synth_out);
  emit({{"dataset", o.synth_out}, {"glyphs", d.glyphs.size()}});
  return kOk;
}

int cmd_stats(const Options& o) {
  print_config("stats", {{"dataset", o.dataset}, {"out", o.out}});
  const auto stats = data::to_json(data::dataset_stats(load(o)));
  const auto dir = make_run_dir(o.out, "stats", 0);
  write_json(stats, dir / "stats.json");
  emit({{"run_dir", dir.string()}, {"stats", stats}});
  return kOk;
}

int cmd_train(const Options& o) {
  const auto cfg = train_config(o);
  print_config("train", {{"train", train::to_json(cfg)}, {"out", o.out}});
  const auto dataset = load(o);
  const auto dir = make_run_dir(o.out, "train", cfg.seed);
  write_json(train::to_json(cfg), dir / "config.json");

  const auto parts = data::apply_split(dataset, data::split(dataset, cfg.split_seed));
  const auto t0 = std::chrono::steady_clock::now();
  auto result = train::train(cfg, parts.train, parts.validation, progress(""));
  const double train_seconds = seconds_since(t0);
  result.checkpoint.metadata["dataset_provenance"] = dataset.provenance;

  nn::save_checkpoint(result.checkpoint, dir / "model.tdck");
  train::write_history_csv(result.history, dir / "history.csv");
  const auto metrics = train::evaluate(result.checkpoint, parts.test);
  write_json(train::to_json(metrics), dir / "metrics.json");
  const json report{{"best_epoch", result.best_epoch},
                    {"best_val_accuracy", result.best_val_accuracy},
                    {"epochs_run", result.history.size()},
                    {"stopped_early", result.stopped_early},
                    {"skipped_training_glyphs", result.skipped},
                    {"test_accuracy", metrics.accuracy},
                    {"test_count", metrics.count},
                    {"train_seconds", train_seconds}};
  write_json(report, dir / "report.json");
  emit({{"run_dir", dir.string()}, {"checkpoint", (dir / "model.tdck").string()}, {"report", report}});
  return kOk;
}

int cmd_eval(const Options& o) {
  print_config("eval", {{"checkpoint", o.checkpoints}, {"dataset", o.dataset}, {"split_seed", o.split_seed},
                        {"bucket", o.bucket}, {"out", o.out}});
  const auto ck = single_checkpoint(o);
  const auto glyphs = select_bucket(load(o), o);
  const auto metrics = train::to_json(train::evaluate(ck, glyphs));
  const auto dir = make_run_dir(o.out, "eval", o.split_seed);
  write_json(metrics, dir / "metrics.json");
  emit({{"run_dir", dir.string()}, {"accuracy", metrics["accuracy"]}, {"count", metrics["count"]}});
  return kOk;
}

int cmd_ablate(const Options& o) {
  Options po = o;
  po.model = "polar1d";
  const auto cfg = train_config(po);
  json printed = train::to_json(cfg);
  printed.erase("input_mode");
  print_config("ablate", {{"train", printed}, {"input_modes", {"distance", "angle", "both"}}, {"out", o.out}});
  const auto dataset = load(o);
  const auto dir = make_run_dir(o.out, "ablate", cfg.seed);
  const auto rows = train::ablation_run(cfg, dataset, progress("ablate "));
  const auto table = train::to_json(rows);
  std::ofstream csv(dir / "ablation.csv");
  csv << "input_mode,test_accuracy,parameters,best_epoch,epochs_run\n" << std::setprecision(10);
  for (const auto& r : rows) {
    csv << r.input_mode << ',' << r.test_accuracy << ',' << r.parameters << ',' << r.best_epoch << ','
        << r.epochs_run << '\n';
  }
  if (!csv) throw IoError("cannot write " + (dir / "ablation.csv").string());
  const double distance = rows[0].test_accuracy, angle = rows[1].test_accuracy, both = rows[2].test_accuracy;
  const bool ordering = both >= angle - 0.02 && both >= distance - 0.02;
  const json report{{"rows", table}, {"ordering_holds", ordering}};
  write_json(report, dir / "ablation.json");
  emit({{"run_dir", dir.string()}, {"ablation", report}});
  return kOk;
}

int cmd_curve(const Options& o) {
  const auto fractions = parse_fractions(o.fractions);
  print_config("curve", {{"checkpoint", o.checkpoints}, {"dataset", o.dataset}, {"split_seed", o.split_seed},
                         {"bucket", o.bucket}, {"fractions", fractions}, {"out", o.out}});
  const auto ck = single_checkpoint(o);
  const auto glyphs = select_bucket(load(o), o);
  const auto curve = train::completion_curve(ck, glyphs, fractions);
  std::vector<double> xs, ys;
  json points = json::array();
  for (const auto& p : curve) {
    xs.push_back(p.fraction);
    ys.push_back(p.accuracy);
    points.push_back({{"fraction", p.fraction}, {"accuracy", p.accuracy}});
  }
  const auto dir = make_run_dir(o.out, "curve", o.split_seed);
  train::write_curve_csv(curve, dir / "curve.csv");
  image::write_png(train::plot_curve(curve), dir / "curve.png");
  const json report{{"points", points}, {"spearman", train::spearman(xs, ys)}, {"count", glyphs.size()}};
  write_json(report, dir / "curve.json");
  emit({{"run_dir", dir.string()}, {"curve", report}});
  return kOk;
}

int cmd_gallery(const Options& o) {
  if (o.k < 1) throw InvalidArgument("--k must be at least 1");
  print_config("gallery", {{"checkpoint", o.checkpoints}, {"dataset", o.dataset}, {"split_seed", o.split_seed},
                           {"bucket", o.bucket}, {"k", o.k}, {"out", o.out}});
  const auto ck = single_checkpoint(o);
  const auto glyphs = select_bucket(load(o), o);
  const auto entries = train::error_gallery(ck, glyphs, o.k);
  const auto dir = make_run_dir(o.out, "gallery", o.split_seed);
  image::write_png(train::render_gallery(entries), dir / "gallery.png");
  write_json(train::to_json(entries), dir / "gallery.json");
  emit({{"run_dir", dir.string()}, {"errors_shown", entries.size()}});
  return kOk;
}

int cmd_audit(const Options& o) {
  const bool from_checkpoint = !o.checkpoints.empty();
  print_config("audit", from_checkpoint ? json{{"checkpoint", o.checkpoints}, {"out", o.out}}
                                        : json{{"model", o.model}, {"input", o.input}, {"out", o.out}});
  std::vector<nn::ModelSpec> specs;
  if (from_checkpoint) {
    for (const auto& path : o.checkpoints) specs.push_back(nn::load_checkpoint(path).spec);
  } else {
    specs.push_back(models::build_model(o.model, o.input));
  }
  const auto dir = make_run_dir(o.out, "audit", 0);
  json reports = json::array();
  std::string failure;
  for (const auto& spec : specs) {
    const auto report = models::audit(spec);
    std::cout << models::format_report(report);
    reports.push_back(models::to_json(report));
    if (!report.passed && failure.empty()) failure = spec.name + ": " + report.failure;
  }
  write_json(reports, dir / "audit.json");
  emit({{"run_dir", dir.string()}, {"passed", failure.empty()}});
  if (!failure.empty()) throw AuditFailed(failure);
  return kOk;
}

serve::ModelRegistry load_registry(const Options& o) {
  if (o.checkpoints.empty()) throw InvalidArgument("at least one --checkpoint is required");
  serve::ModelRegistry registry;
  for (const auto& path : o.checkpoints) {
    try {
      registry.add(nn::load_checkpoint(path));
    } catch (const InvalidArgument& e) {
      if (std::string(e.what()).find("audit") != std::string::npos) throw AuditFailed(path + ": " + e.what());
      throw;
    }
  }
  return registry;
}

int cmd_serve(const Options& o) {
  const auto [host, port] = serve::parse_bind(o.bind);
  print_config("serve", {{"checkpoint", o.checkpoints}, {"bind", o.bind}, {"static", o.static_dir}});
  serve::ServiceOptions options;
  if (!o.static_dir.empty()) options.static_dir = o.static_dir;

  // Signals are taken synchronously by a watcher thread, which stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  serve::Service service(load_registry(o), options);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  try {
    service.listen(host, port);
  } catch (...) {
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    throw;
  }
  watcher.join();
  emit({{"stopped", true}});
  return kOk;
}

int cmd_infer_file(const Options& o) {
  print_config("infer-file", {{"checkpoint", o.checkpoints}, {"request", o.request}});
  const auto registry = load_registry(o);
  std::string text;
  if (o.request == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), {});
  } else {
    std::ifstream f(o.request);
    if (!f) throw IoError("cannot open " + o.request);
    text.assign(std::istreambuf_iterator<char>(f), {});
  }
  json body;
  try {
    body = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(o.request + " is not valid JSON: " + e.what());
  }
  emit(serve::to_json(registry.infer(serve::parse_infer_request(body))));
  return kOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const serve::RequestError*>(&e)) return kUsage;
  if (dynamic_cast<const InvalidArgument*>(&e)) return kUsage;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const AuditFailed*>(&e)) return kAuditFailed;
  if (dynamic_cast<const NumericError*>(&e)) return kNumeric;
  if (dynamic_cast<const FormatError*>(&e)) return kFormat;
  return kFailure;
}

int report_error(const std::string& code, int exit_code, const std::string& message) {
  std::cerr << json{{"error", code}, {"exit_code", exit_code}, {"message", message}}.dump() << std::endl;
  return exit_code;
}

// --- option wiring -------------------------------------------------------------

struct Wiring {
  CLI::App* app;
  Options& o;

  Wiring& model() {
    app->add_option("--model", o.model, "bitmap2d or polar1d")->envname("TOUCHDIGITS_MODEL")
        ->check(CLI::IsMember({"bitmap2d", "polar1d"}));
    return input();
  }
  Wiring& input() {
    app->add_option("--input", o.input, "polar channels: angle, distance or both")->envname("TOUCHDIGITS_INPUT")
        ->check(CLI::IsMember({"angle", "distance", "both"}));
    return *this;
  }
  Wiring& dataset() {
    app->add_option("--dataset", o.dataset, "dataset JSON (optionally gzip)")->envname("TOUCHDIGITS_DATASET");
    return *this;
  }
  Wiring& seed() {
    app->add_option("--seed", o.seed, "random seed")->envname("TOUCHDIGITS_SEED");
    return *this;
  }
  Wiring& split_seed() {
    app->add_option("--split-seed", o.split_seed, "seed of the 60/20/20 split")->envname("TOUCHDIGITS_SPLIT_SEED");
    return *this;
  }
  Wiring& bucket() {
    app->add_option("--bucket", o.bucket, "split bucket to use: train, validation, test or all")
        ->envname("TOUCHDIGITS_BUCKET")->check(CLI::IsMember({"train", "validation", "test", "all"}));
    return *this;
  }
  Wiring& out(const std::string& help) {
    app->add_option("--out", o.out, help)->envname("TOUCHDIGITS_OUT");
    return *this;
  }
  Wiring& checkpoint() {
    app->add_option("--checkpoint", o.checkpoints, "checkpoint file (repeatable)")
        ->envname("TOUCHDIGITS_CHECKPOINT")->delimiter(',');
    return *this;
  }
  Wiring& training() {
    app->add_option("--lr", o.lr, "base learning rate")->envname("TOUCHDIGITS_LR");
    app->add_option("--momentum", o.momentum, "momentum coefficient")->envname("TOUCHDIGITS_MOMENTUM");
    app->add_option("--decay", o.decay, "learning-rate decay per epoch")->envname("TOUCHDIGITS_DECAY");
    app->add_option("--batch", o.batch, "minibatch size")->envname("TOUCHDIGITS_BATCH");
    app->add_option("--max-epochs", o.max_epochs, "epoch cap (default: 10 bitmap2d, 200 polar1d)")
        ->envname("TOUCHDIGITS_MAX_EPOCHS");
    app->add_option("--patience", o.patience, "early-stopping patience in epochs")->envname("TOUCHDIGITS_PATIENCE");
    app->add_option("--early-stopping", o.early_stopping, "auto (model default), on or off")
        ->envname("TOUCHDIGITS_EARLY_STOPPING")->check(CLI::IsMember({"auto", "on", "off"}));
    app->add_flag("--nesterov", o.nesterov, "Nesterov momentum")->envname("TOUCHDIGITS_NESTEROV");
    return dataset().seed().split_seed();
  }
};

}  // namespace

int run(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Touchscreen digit recognition: data, training, evaluation and serving"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(serve::kVersion));

  const std::string runs_help = "root directory for run directories";
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  Wiring{synth, o}.seed();
  synth->add_option("--out", o.synth_out, "dataset file to write (.gz compresses)")->required();
  synth->add_option("--count", o.count, "number of glyphs")->envname("TOUCHDIGITS_COUNT");
  synth->add_option("--noise", o.noise, "default or zero")->check(CLI::IsMember({"default", "zero"}));

  auto* stats = app.add_subcommand("stats", "dataset statistics");
  Wiring{stats, o}.dataset().out(runs_help);

  auto* trn = app.add_subcommand("train", "train a model");
  Wiring{trn, o}.model().training().out(runs_help);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  Wiring{eval, o}.checkpoint().dataset().split_seed().bucket().out(runs_help);

  auto* ablate = app.add_subcommand("ablate", "train polar models on distance, angle and both inputs");
  Wiring{ablate, o}.training().out(runs_help);

  auto* curve = app.add_subcommand("curve", "accuracy versus glyph completion");
  Wiring{curve, o}.checkpoint().dataset().split_seed().bucket().out(runs_help);
  curve->add_option("--fractions", o.fractions, "comma-separated completion fractions ending in 1")
      ->envname("TOUCHDIGITS_FRACTIONS");

  auto* gallery = app.add_subcommand("gallery", "render the most confident misclassifications");
  Wiring{gallery, o}.checkpoint().dataset().split_seed().bucket().out(runs_help);
  gallery->add_option("--k", o.k, "number of errors to show");

  auto* audit = app.add_subcommand("audit", "compare an architecture with the reference layer tables");
  Wiring{audit, o}.model().checkpoint().out(runs_help);

  auto* srv = app.add_subcommand("serve", "HTTP inference service");
  Wiring{srv, o}.checkpoint();
  srv->add_option("--bind", o.bind, "host:port")->envname("TOUCHDIGITS_BIND");
  srv->add_option("--static", o.static_dir, "directory served at /")->envname("TOUCHDIGITS_STATIC");

  auto* infer = app.add_subcommand("infer-file", "run one inference request from a JSON file");
  Wiring{infer, o}.checkpoint();
  infer->add_option("--request", o.request, "request JSON file, - for stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg) if (ch == '\n') ch = ' ';
    return report_error("usage", kUsage, msg);
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*stats) return cmd_stats(o);
    if (*trn) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*ablate) return cmd_ablate(o);
    if (*curve) return cmd_curve(o);
    if (*gallery) return cmd_gallery(o);
    if (*audit) return cmd_audit(o);
    if (*srv) return cmd_serve(o);
    if (*infer) return cmd_infer_file(o);
  } catch (const Error& e) {
    return report_error(e.code(), exit_code_for(e), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", kFailure, e.what());
  }
  return kFailure;
}

}  // namespace touchdigits::cli
