// hsemap: synthesize scenes, train, predict, evaluate and compare HSE maps.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hse/assess.hpp"
#include "hse/checkpoint.hpp"
#include "hse/config.hpp"
#include "hse/error.hpp"
#include "hse/gradcheck.hpp"
#include "hse/mosaic.hpp"
#include "hse/net.hpp"
#include "hse/parallel.hpp"
#include "hse/patches.hpp"
#include "hse/raster.hpp"
#include "hse/report.hpp"
#include "hse/synth.hpp"
#include "hse/trainer.hpp"

namespace fs = std::filesystem;
using namespace hse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr std::uint64_t kDefaultSeed = 42;

struct GlobalOptions {
  int threads = 0;
  bool deterministic = false;
};

void apply_threads(const GlobalOptions& g) {
  set_num_threads(g.deterministic ? 1 : resolve_threads(g.threads));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
  const fs::path probe = dir / ".hsemap_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw IoError(what + " '" + path.string() + "' does not exist");
}

void require_parent_writable(const fs::path& path) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw IoError("output directory '" + parent.string() + "' does not exist");
}

// ---------------------------------------------------------------- manifest

struct ManifestEntry {
  int scene = 0;
  fs::path image;
  fs::path labels;
  fs::path points;
  int width = 0;
  int height = 0;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

constexpr const char* kManifestName = "manifest.csv";

void write_manifest(const fs::path& dir, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(dir / kManifestName);
  if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
  out << "scene,image,labels,points,width,height,x0,y0,x1,y1\n";
  out << std::setprecision(17);
  for (const auto& e : entries) {
    out << e.scene << ',' << e.image.string() << ',' << e.labels.string() << ',' << e.points.string() << ','
        << e.width << ',' << e.height << ',' << e.x0 << ',' << e.y0 << ',' << e.x1 << ',' << e.y1 << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw IoError("no manifest at '" + path.string() + "'");
  std::vector<ManifestEntry> entries;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw DecodeError(path.string() + ": expected 10 columns");
    ManifestEntry e;
    try {
      e.scene = std::stoi(f[0]);
      e.width = std::stoi(f[4]);
      e.height = std::stoi(f[5]);
      e.x0 = std::stod(f[6]);
      e.y0 = std::stod(f[7]);
      e.x1 = std::stod(f[8]);
      e.y1 = std::stod(f[9]);
    } catch (const std::exception&) {
      throw DecodeError(path.string() + ": bad number in '" + line + "'");
    }
    e.image = dir / f[1];
    e.labels = dir / f[2];
    e.points = f[3].empty() ? fs::path() : dir / f[3];
    entries.push_back(e);
  }
  if (entries.empty()) throw DecodeError(path.string() + ": no scenes listed");
  return entries;
}

SampleSet load_samples(const fs::path& dir, int id_offset = 0) {
  SampleSet set;
  for (const auto& e : read_manifest(dir)) {
    require_file(e.image, "image");
    require_file(e.labels, "labels");
    set.append(extract_patches(load_raster(e.image), load_raster(e.labels), e.scene + id_offset));
  }
  return set;
}

// ------------------------------------------------------------------- synth

struct SynthOptions {
  fs::path out;
  int scenes = 1;
  std::string size = "256x256";
  std::uint64_t seed = kDefaultSeed;
  double fraction = 0.2;
  double points_spacing = 200.0;
};

int run_synth(const SynthOptions& o) {
  int width = 0, height = 0;
  if (std::sscanf(o.size.c_str(), "%dx%d", &width, &height) != 2) {
    throw InvalidConfig("--size expects WxH, got '" + o.size + "'");
  }
  if (o.scenes < 1) throw InvalidConfig("--scenes must be >= 1");
  ensure_dir(o.out);
  std::cout << "synth: " << o.scenes << " scene(s) of " << width << "x" << height << ", seed " << o.seed << "\n";
  Rng master(o.seed);
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < o.scenes; ++i) {
    SynthSpec spec;
    spec.width = width;
    spec.height = height;
    spec.seed = master.next();
    spec.settlement_fraction = o.fraction;
    spec.origin_x = 500000.0 + i * (width * 10.0 + 1000.0);
    spec.origin_y = 5000000.0;
    const SynthScene scene = synth_scene(spec);

    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%03d", i);
    ManifestEntry e;
    e.scene = i;
    e.image = std::string(stem) + "_image.bsqf";
    e.labels = std::string(stem) + "_labels.bsqf";
    e.points = std::string(stem) + "_points.csv";
    e.width = width;
    e.height = height;
    e.x0 = spec.origin_x;
    e.x1 = spec.origin_x + width * scene.image.gsd;
    e.y1 = spec.origin_y;
    e.y0 = spec.origin_y - height * scene.image.gsd;
    save_raster(scene.image, o.out / e.image);
    save_raster(scene.labels, o.out / e.labels);

    std::vector<CheckPoint> points;
    for (CheckPoint p : mlgcp_grid(e.x0, e.y0, e.x1, e.y1, o.points_spacing)) {
      int row = 0, col = 0;
      if (!locate_pixel(scene.labels, p.x, p.y, row, col)) continue;
      const float v = scene.labels.at(0, row, col);
      if (scene.labels.is_nodata(v)) continue;
      p.label = static_cast<int>(v);
      points.push_back(p);
    }
    std::ofstream pts(o.out / e.points);
    if (!pts) throw IoError("cannot write '" + (o.out / e.points).string() + "'");
    write_points_csv(pts, points);
    entries.push_back(e);
  }
  write_manifest(o.out, entries);
  std::cout << "synth: wrote " << entries.size() << " scene(s) and " << kManifestName << " to " << o.out.string()
            << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- train

const std::set<std::string> kTrainKeys = {"data",  "val_data",   "out",          "history", "f",
                                          "depth", "split",      "seed",         "lr",      "batch_size",
                                          "patience", "max_epochs", "val_fraction", "dropout", "hse_weight"};

struct TrainOptions {
  fs::path config;
  std::vector<std::pair<std::string, std::string>> overrides;
};

int run_train(const TrainOptions& o) {
  RunConfig cfg(kTrainKeys);
  if (!o.config.empty()) cfg.load(o.config);
  for (const auto& [k, v] : o.overrides) cfg.set(k, v);

  const auto data = cfg.get("data");
  const auto out = cfg.get("out");
  if (!data) throw InvalidConfig("no training data: set data=DIR or pass --data");
  if (!out) throw InvalidConfig("no output checkpoint: set out=FILE or pass --out");
  require_file(fs::path(*data) / kManifestName, "manifest");
  const auto val_data = cfg.get("val_data");
  if (val_data) require_file(fs::path(*val_data) / kManifestName, "manifest");
  require_parent_writable(*out);
  const fs::path history_path = cfg.get_or("history", *out + ".history.csv");
  require_parent_writable(history_path);

  ArchSpec arch;
  arch.f = static_cast<int>(cfg.get_int("f", 16));
  arch.depth = static_cast<int>(cfg.get_int("depth", 2));
  arch.validate();
  TrainConfig tc;
  std::uint64_t seed = kDefaultSeed;
  if (const auto s = cfg.get("seed")) {
    try {
      seed = std::stoull(*s);
    } catch (const std::exception&) {
      throw InvalidConfig("seed expects an unsigned integer, got '" + *s + "'");
    }
  }
  tc.lr = cfg.get_double("lr", tc.lr);
  tc.batch_size = static_cast<int>(cfg.get_int("batch_size", tc.batch_size));
  tc.patience = static_cast<int>(cfg.get_int("patience", tc.patience));
  tc.max_epochs = static_cast<int>(cfg.get_int("max_epochs", tc.max_epochs));
  tc.split = parse_split_mode(cfg.get_or("split", "spatial"));
  tc.val_fraction = cfg.get_double("val_fraction", tc.val_fraction);
  tc.class_weights.hse = cfg.get_double("hse_weight", 1.0);
  const double dropout_rate = cfg.get_double("dropout", 0.5);

  Rng master(seed);
  Rng init_rng = master.fork();
  Rng split_rng = master.fork();
  tc.seed = master.next();
  tc.validate();
  Model model = build(arch, init_rng, dropout_rate);

  std::cout << "hsemap train\n"
            << "  seed          " << seed << "\n"
            << "  architecture  f=" << arch.f << " depth=" << arch.depth << " (" << model.conv_count()
            << " conv layers, dropout " << dropout_rate << ")\n"
            << "  parameters    " << model.param_count() << "\n"
            << "  optimizer     nadam lr=" << tc.lr << " batch=" << tc.batch_size << " patience=" << tc.patience
            << " max_epochs=" << tc.max_epochs << "\n";

  SampleSet all = load_samples(*data);
  SampleSet train_set;
  SampleSet val_set;
  if (val_data) {
    train_set = std::move(all);
    val_set = load_samples(*val_data, 1000000);
    std::cout << "  validation    separate scenes from " << *val_data << "\n";
  } else {
    DatasetSplit split = split_dataset(all, tc.split, tc.val_fraction, split_rng);
    std::cout << "  validation    " << to_string(tc.split) << " split, fraction " << tc.val_fraction << " ("
              << split.discarded << " straddling patches discarded)\n";
    train_set = std::move(split.train);
    val_set = std::move(split.val);
  }
  std::cout << "  patches       " << train_set.size() << " train / " << val_set.size() << " val\n" << std::flush;

  std::ofstream history(history_path);
  if (!history) throw IoError("cannot write history '" + history_path.string() + "'");
  history << std::setprecision(10);
  write_history_header(history);
  const TrainResult result = train(std::move(model), train_set, val_set, tc, [&](const EpochRecord& r, const Model&) {
    write_history_line(history, r);
    history.flush();
    std::cout << "epoch " << std::setw(3) << r.epoch << "  train " << std::fixed << std::setprecision(5)
              << r.train_loss << "  val " << r.val_loss << "  (" << std::setprecision(1) << r.seconds << " s)\n"
              << std::defaultfloat << std::flush;
    return false;
  });
  save_checkpoint(result.best, *out);
  std::cout << (result.early_stopped ? "early stop" : "max epochs reached") << "; best epoch " << result.best_epoch
            << ", checkpoint " << *out << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- predict

struct PredictOptions {
  fs::path model;
  fs::path image;
  fs::path out;
  fs::path prob;
  fs::path pgm;
  int tile = kDefaultTile;
  int margin = -1;
  std::string precision = "float";
};

int run_predict(const PredictOptions& o) {
  require_file(o.model, "model");
  require_file(o.image, "image");
  require_parent_writable(o.out);
  if (!o.prob.empty()) require_parent_writable(o.prob);
  if (o.precision != "float" && o.precision != "double") throw InvalidConfig("--precision is float or double");

  const Model model = load_checkpoint(o.model);
  BsqfReader source(o.image);
  const RasterInfo& info = source.info();
  if (info.bands != model.spec.in_channels) {
    throw ContractError("image has " + std::to_string(info.bands) + " bands, model expects " +
                        std::to_string(model.spec.in_channels));
  }
  if (info.scale != 1.0) throw ContractError("image is not normalized (scale=" + std::to_string(info.scale) + ")");
  int margin = o.margin;
  if (margin < 0) {
    const int radius = receptive_radius(model.spec);
    margin = std::max(kDefaultMargin, radius + radius % 2);
  }
  const TilePlan plan = plan_tiles(info.width, info.height, o.tile, margin);
  std::cout << "predict: " << info.width << "x" << info.height << " -> " << info.width / 2 << "x"
            << info.height / 2 << ", " << plan.tiles.size() << " tile(s) of " << plan.tile << " px, margin "
            << plan.margin << ", " << o.precision << " precision\n";

  BsqfWriter hse(o.out, map_info(info, DType::U8));
  std::unique_ptr<BsqfWriter> prob;
  if (!o.prob.empty()) prob = std::make_unique<BsqfWriter>(o.prob, map_info(info, DType::F32));
  if (o.precision == "float") {
    predict_map(model.cast<float>(), source, plan, hse, prob.get());
  } else {
    predict_map(model, source, plan, hse, prob.get());
  }
  hse.finish();
  if (prob) prob->finish();
  if (!o.pgm.empty()) write_pgm(load_raster(o.out), o.pgm);
  std::cout << "predict: wrote " << o.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  std::vector<fs::path> maps;
  fs::path points;
  fs::path buildings;
  fs::path report;
};

int run_evaluate(const EvaluateOptions& o) {
  if (o.points.empty() == o.buildings.empty()) throw InvalidConfig("pass exactly one of --points or --buildings");
  for (const auto& m : o.maps) require_file(m, "map");
  if (!o.points.empty()) require_file(o.points, "points file");
  if (!o.buildings.empty()) require_file(o.buildings, "building mask");
  if (!o.report.empty()) require_parent_writable(o.report);

  std::vector<ProductReport> rows;
  std::vector<CheckPoint> points;
  Raster buildings;
  if (!o.points.empty()) points = load_points_csv(o.points);
  if (!o.buildings.empty()) buildings = load_raster(o.buildings);
  for (const auto& path : o.maps) {
    const Raster map = load_raster(path);
    ProductReport row;
    row.name = path.stem().string();
    if (!o.points.empty()) {
      const PointAssessment a = confusion_from_points(map, points);
      row.cm = a.cm;
      row.nodata_points = a.nodata_points.size();
    } else {
      row.building_recall = building_recall(map, buildings);
    }
    rows.push_back(row);
  }
  std::cout << report_text(rows);
  if (!o.report.empty()) {
    std::ofstream out(o.report);
    if (!out) throw IoError("cannot write report '" + o.report.string() + "'");
    out << report_json(rows);
  }
  return kExitOk;
}

// ----------------------------------------------------------------- compare

struct CompareOptions {
  fs::path ours, guf, ghsl, out, ppm;
};

int run_compare(const CompareOptions& o) {
  require_file(o.ours, "map");
  require_file(o.guf, "GUF map");
  require_file(o.ghsl, "GHSL map");
  require_parent_writable(o.out);
  const Raster codes = agreement_map(load_raster(o.ours), load_raster(o.guf), load_raster(o.ghsl));
  save_raster(codes, o.out);
  if (!o.ppm.empty()) write_agreement_ppm(codes, o.ppm);
  std::size_t counts[8] = {};
  for (float v : codes.data) {
    if (v < 8) ++counts[static_cast<int>(v)];
  }
  const char* names[8] = {"none",      "only ours",    "only GUF",     "only GHSL",
                          "all three", "all but ours", "all but GUF", "all but GHSL"};
  for (int c = 0; c < 8; ++c) std::cout << c << "  " << std::left << std::setw(14) << names[c] << counts[c] << "\n";
  return kExitOk;
}

// -------------------------------------------------------- params/gradcheck

int run_params(int f, int depth) {
  std::cout << param_count(ArchSpec{f, depth, 10}) << "\n";
  return kExitOk;
}

int run_gradcheck_cmd(std::uint64_t seed, int instances) {
  GradCheckOptions opts;
  opts.seed = seed;
  opts.instances = instances;
  const auto results = run_gradcheck(opts);
  std::map<std::string, std::pair<double, bool>> summary;
  std::vector<std::string> order;
  for (const auto& r : results) {
    if (!summary.count(r.layer)) {
      order.push_back(r.layer);
      summary[r.layer] = {0.0, true};
    }
    auto& [worst, ok] = summary[r.layer];
    worst = std::max(worst, r.max_rel_error);
    ok = ok && r.passed;
  }
  bool all = true;
  for (const auto& name : order) {
    const auto& [worst, ok] = summary[name];
    std::cout << (ok ? "PASS " : "FAIL ") << std::left << std::setw(14) << name << " max rel err "
              << std::scientific << std::setprecision(2) << worst << std::defaultfloat << "\n";
    all = all && ok;
  }
  std::cout << (all ? "gradcheck passed" : "gradcheck FAILED") << " (" << instances << " instances per layer, tol "
            << opts.tolerance << ")\n";
  return all ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human settlement extent mapping: synthesize, train, predict, evaluate, compare"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--threads", global.threads, "Worker threads (falls back to S2HSE_THREADS)");
  app.add_flag("--deterministic", global.deterministic, "Single-threaded, fixed reduction order");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic image/label scenes");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--scenes", synth.scenes, "Number of scenes");
  synth_cmd->add_option("--size", synth.size, "Scene size WxH in 10 m pixels");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--fraction", synth.fraction, "Target HSE share of label cells");
  synth_cmd->add_option("--points-spacing", synth.points_spacing, "Check point spacing in meters");

  TrainOptions train_opts;
  std::map<std::string, std::string> train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model on synthesized or prepared scenes");
  train_cmd->add_option("--config", train_opts.config, "key=value run configuration");
  const std::vector<std::pair<std::string, std::string>> train_flag_keys = {
      {"--data", "data"},           {"--val-data", "val_data"},     {"--out", "out"},
      {"--history", "history"},     {"--f", "f"},                   {"--depth", "depth"},
      {"--split", "split"},         {"--seed", "seed"},             {"--lr", "lr"},
      {"--batch-size", "batch_size"}, {"--patience", "patience"},   {"--max-epochs", "max_epochs"},
      {"--val-fraction", "val_fraction"}, {"--dropout", "dropout"}, {"--hse-weight", "hse_weight"}};
  for (const auto& [flag, key] : train_flag_keys) train_cmd->add_option(flag, train_flags[key]);

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Tiled inference producing a 20 m HSE map");
  predict_cmd->add_option("--model", predict.model, "Checkpoint")->required();
  predict_cmd->add_option("--image", predict.image, "Normalized 10-band BSQF image")->required();
  predict_cmd->add_option("--out", predict.out, "Output u8 map (BSQF)")->required();
  predict_cmd->add_option("--prob", predict.prob, "Optional f32 probability raster");
  predict_cmd->add_option("--pgm", predict.pgm, "Optional grayscale preview of the map");
  predict_cmd->add_option("--tile", predict.tile, "Tile size in input pixels");
  predict_cmd->add_option("--margin", predict.margin, "Discarded margin in input pixels");
  predict_cmd->add_option("--precision", predict.precision, "float or double");

  EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Accuracy metrics from check points or a building mask");
  evaluate_cmd->add_option("--map", evaluate.maps, "Binary map(s) to assess")->required();
  evaluate_cmd->add_option("--points", evaluate.points, "Check points CSV (x_m,y_m,label)");
  evaluate_cmd->add_option("--buildings", evaluate.buildings, "Building mask (u8 BSQF)");
  evaluate_cmd->add_option("--report", evaluate.report, "JSON report path");

  CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "Three-product agreement map");
  compare_cmd->add_option("--ours", compare.ours)->required();
  compare_cmd->add_option("--guf", compare.guf)->required();
  compare_cmd->add_option("--ghsl", compare.ghsl)->required();
  compare_cmd->add_option("--out", compare.out)->required();
  compare_cmd->add_option("--ppm", compare.ppm, "Color preview");

  int params_f = 16, params_depth = 2;
  auto* params_cmd = app.add_subcommand("params", "Trainable parameter count");
  params_cmd->add_option("--f", params_f, "First-layer width");
  params_cmd->add_option("--depth", params_depth, "Convolutions per block");

  std::uint64_t grad_seed = kDefaultSeed;
  int grad_instances = 20;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer's gradients");
  grad_cmd->add_option("--seed", grad_seed);
  grad_cmd->add_option("--instances", grad_instances);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    apply_threads(global);
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) {
      for (const auto& [flag, key] : train_flag_keys) {
        if (train_cmd->count(flag) > 0) train_opts.overrides.emplace_back(key, train_flags[key]);
      }
      return run_train(train_opts);
    }
    if (*predict_cmd) return run_predict(predict);
    if (*evaluate_cmd) return run_evaluate(evaluate);
    if (*compare_cmd) return run_compare(compare);
    if (*params_cmd) return run_params(params_f, params_depth);
    if (*grad_cmd) return run_gradcheck_cmd(grad_seed, grad_instances);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
