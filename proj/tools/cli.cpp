/*
 * Copyright 2026 The InfoAttr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "infoattr/classifier.hpp"
#include "infoattr/engine.hpp"
#include "infoattr/errors.hpp"
#include "infoattr/evaluation.hpp"
#include "infoattr/file_io.hpp"
#include "infoattr/parallel.hpp"
#include "infoattr/render.hpp"
#include "infoattr/sampler.hpp"
#include "infoattr/serve.hpp"
#include "infoattr/wire.hpp"

namespace infoattr::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidGeometry:
    case ErrorCode::kInvalidInput:
      return kExitUsage;
    case ErrorCode::kIo:
    case ErrorCode::kFormat:
    case ErrorCode::kDegenerateData:
      return kExitIo;
    case ErrorCode::kProtocol:
      return kExitProtocol;
    case ErrorCode::kUnsupportedOracle:
    case ErrorCode::kUndefinedCorrelation:
      return kExitInternal;
  }
  return kExitInternal;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

long long parse_integer(const std::string& text, const std::string& flag) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw UsageError(flag + ": '" + text + "' is not an integer");
  }
  return v;
}

double parse_real(const std::string& text, const std::string& flag) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw UsageError(flag + ": '" + text + "' is not a number");
  }
  return v;
}

std::vector<int> parse_positive_list(const std::string& text,
                                     const std::string& flag) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    const long long v = parse_integer(item, flag);
    if (v < 1 || v > 1'000'000) {
      throw UsageError(flag + " values must be >= 1, got " + item);
    }
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw UsageError(flag + " needs at least one value");
  return out;
}

ClassSelection parse_classes(const std::string& text) {
  ClassSelection sel;
  if (text.starts_with("top:")) {
    const long long k = parse_integer(text.substr(4), "--classes");
    if (k < 1) throw UsageError("--classes top:k needs k >= 1");
    sel.top_k = static_cast<int>(k);
    return sel;
  }
  for (const auto& item : split(text, ',')) {
    const long long c = parse_integer(item, "--classes");
    if (c < 0) throw UsageError("--classes indices must be >= 0");
    sel.indices.push_back(static_cast<int>(c));
  }
  if (sel.indices.empty()) throw UsageError("--classes is empty");
  return sel;
}

std::string substitute_k(std::string spec, int k) {
  const std::string token = "{K}";
  for (auto pos = spec.find(token); pos != std::string::npos;
       pos = spec.find(token)) {
    spec.replace(pos, token.size(), std::to_string(k));
  }
  return spec;
}

std::unique_ptr<Classifier> open_classifier(const std::string& spec) {
  if (spec.starts_with("builtin:")) {
    return load_builtin_classifier(spec.substr(8));
  }
  if (spec.starts_with("exec:") || spec.starts_with("tcp:")) {
    return connect_external(spec);
  }
  throw UsageError(
      "--classifier must be builtin:<file>, exec:<command> or "
      "tcp:<host:port>, got '" +
      spec + "'");
}

// reference:<byte>[,<byte>,<byte>] | identity | exec:<cmd> | tcp:<addr> |
// <sampler file>. "{K}" in the spec is replaced by the patch size.
std::unique_ptr<Sampler> open_sampler(const std::string& raw_spec, int k,
                                      int channels) {
  const std::string spec = substitute_k(raw_spec, k);
  if (spec.starts_with("reference:")) {
    std::vector<std::uint8_t> fill;
    for (const auto& item : split(spec.substr(10), ',')) {
      const long long v = parse_integer(item, "--sampler");
      if (v < 0 || v > 255) throw UsageError("--sampler fill must be a byte");
      fill.push_back(static_cast<std::uint8_t>(v));
    }
    if (fill.size() == 1 && channels == 3) fill.assign(3, fill[0]);
    return std::make_unique<ReferenceSampler>(k, std::move(fill));
  }
  if (spec == "identity") return std::make_unique<IdentitySampler>(k, channels);
  if (spec.starts_with("exec:") || spec.starts_with("tcp:")) {
    return std::make_unique<ExternalSampler>(open_transport(spec), spec);
  }
  return load_sampler(spec);
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    fail(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) {
    fail(ErrorCode::kIo,
         fmt::format("{} contains 0 image files (.png/.ppm/.pgm)",
                     dir.string()));
  }
  return out;
}

std::vector<Image> load_images(const std::vector<fs::path>& paths) {
  std::vector<Image> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_image(p));
  return out;
}

// Digest of a file input, or of the spec text for process/network peers.
json describe_input(const std::string& spec) {
  std::string path = spec;
  if (spec.starts_with("builtin:")) path = spec.substr(8);
  std::error_code ec;
  if (!spec.starts_with("exec:") && !spec.starts_with("tcp:") &&
      fs::is_regular_file(path, ec)) {
    return {{"spec", spec}, {"sha256", sha256_hex(read_file(path))}};
  }
  if (fs::is_directory(path, ec)) {
    std::string digest;
    for (const auto& p : list_images(path)) {
      digest += p.filename().string() + ":" + sha256_hex(read_file(p)) + "\n";
    }
    return {{"spec", spec}, {"sha256", sha256_hex(digest)}};
  }
  return {{"spec", spec}};
}

// Files are produced in memory and only written once the whole run
// succeeded, each through an atomic rename.
class OutputSet {
 public:
  void add(std::string name, std::string bytes) {
    files_.emplace_back(std::move(name), std::move(bytes));
  }
  void commit(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string());
    for (const auto& [name, bytes] : files_) {
      const fs::path target = dir / name;
      fs::create_directories(target.parent_path(), ec);
      write_file_atomic(target, bytes);
    }
  }
  json names() const {
    json out = json::array();
    for (const auto& f : files_) out.push_back(f.first);
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string manifest_text(const std::string& command,
                          const std::vector<std::string>& argv, json config,
                          json inputs, std::uint64_t seed,
                          const OutputSet& outputs, Clock::time_point start) {
  json m;
  m["tool"] = "infoattr";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["argv"] = argv;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["seed"] = seed;
  m["outputs"] = outputs.names();
  m["wall_time_seconds"] =
      std::chrono::duration<double>(Clock::now() - start).count();
  return m.dump(2) + "\n";
}

std::string patches_csv(const ExplanationResult& result) {
  std::string out = "index,row,col";
  for (int c = 0; c < result.original.num_classes(); ++c) {
    out += fmt::format(",marginal_c{}", c);
  }
  for (int c : result.classes) out += fmt::format(",pmi_c{}", c);
  out += ",ig\n";
  for (std::size_t i = 0; i < result.patches.size(); ++i) {
    const auto& p = result.patches[i];
    out += fmt::format("{},{},{}", i, p.origin.row, p.origin.col);
    for (int c = 0; c < p.marginal.num_classes(); ++c) {
      out += fmt::format(",{:.17g}", p.marginal[c]);
    }
    for (double v : p.pmi) out += fmt::format(",{:.17g}", v);
    out += fmt::format(",{:.17g}\n", p.ig);
  }
  return out;
}

// --- explain ----------------------------------------------------------------

struct ExplainFlags {
  std::string image;
  std::string classifier;
  std::string sampler;
  std::string k = "8";
  std::string n = "8";
  int stride = 0;
  std::string classes = "top:1";
  double eps = kDefaultEps;
  std::uint64_t seed = 0;
  int workers = 0;
  double alpha = 0.5;
  std::string out;
};

void add_explain_outputs(OutputSet& outputs, const std::string& prefix,
                         const ExplanationResult& result, const Image& image,
                         double alpha) {
  for (const auto& map : result.pmi_maps) {
    const std::string stem = fmt::format("{}pmi_c{}", prefix, map.class_index);
    const Image heat = render_heatmap(map, ColormapKind::kDiverging);
    outputs.add(stem + ".json", serialize_map(map));
    outputs.add(stem + ".png", encode_png(heat));
    outputs.add(fmt::format("{}overlay_pmi_c{}.png", prefix, map.class_index),
                encode_png(overlay(image, heat, alpha)));
  }
  const Image heat = render_heatmap(result.ig_map, ColormapKind::kSequential);
  outputs.add(prefix + "ig.json", serialize_map(result.ig_map));
  outputs.add(prefix + "ig.png", encode_png(heat));
  outputs.add(prefix + "overlay_ig.png",
              encode_png(overlay(image, heat, alpha)));
  outputs.add(prefix + "patches.csv", patches_csv(result));
}

std::string correlation_cell(const AttributionMap& a, const AttributionMap& b) {
  try {
    return fmt::format("{:.17g}", pearson(a, b));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUndefinedCorrelation) return "undefined";
    throw;
  }
}

int run_explain(const ExplainFlags& f, const std::vector<std::string>& argv) {
  const auto start = Clock::now();
  const std::vector<int> ks = parse_positive_list(f.k, "--K");
  const std::vector<int> ns = parse_positive_list(f.n, "--N");
  if (f.stride < 0) throw UsageError("--stride must be >= 0");
  if (!(f.eps > 0.0)) throw UsageError("--eps must be > 0");
  if (!(f.alpha >= 0.0 && f.alpha <= 1.0)) {
    throw UsageError("--alpha must lie in [0, 1]");
  }
  const ClassSelection classes = parse_classes(f.classes);
  const int workers = f.workers > 0 ? f.workers : default_workers();

  const Image image = load_image(f.image);
  const auto classifier = open_classifier(f.classifier);

  struct Setting {
    int k;
    int n;
    std::string prefix;
    ExplanationResult result;
  };
  std::vector<Setting> settings;
  const bool sweep = ks.size() > 1 || ns.size() > 1;
  json configs = json::array();
  OutputSet outputs;
  for (int k : ks) {
    if (f.stride > k) throw UsageError("--stride must not exceed K");
    const auto sampler = open_sampler(f.sampler, k, image.channels());
    for (int n : ns) {
      EngineConfig config;
      config.patch_size = k;
      config.samples = n;
      config.stride = f.stride;
      config.eps = f.eps;
      config.classes = classes;
      config.seed = f.seed;
      config.workers = workers;
      const std::string prefix = sweep ? fmt::format("K{}_N{}/", k, n) : "";
      ExplanationResult result = explain(*classifier, *sampler, image, config);
      add_explain_outputs(outputs, prefix, result, image, f.alpha);
      json c = to_json(config);
      c["sampler"] = sampler->id();
      c["classifier"] = classifier->id();
      c["resolved_classes"] = result.classes;
      c["alpha"] = f.alpha;
      configs.push_back(std::move(c));
      settings.push_back({k, n, prefix, std::move(result)});
    }
  }
  if (sweep) {
    std::string csv = "setting_a,setting_b,ig_pearson,pmi_pearson\n";
    for (std::size_t a = 0; a < settings.size(); ++a) {
      for (std::size_t b = a + 1; b < settings.size(); ++b) {
        const auto& ra = settings[a].result;
        const auto& rb = settings[b].result;
        csv += fmt::format(
            "K{}_N{},K{}_N{},{},{}\n", settings[a].k, settings[a].n,
            settings[b].k, settings[b].n,
            correlation_cell(ra.ig_map, rb.ig_map),
            correlation_cell(ra.pmi_maps.front(), rb.pmi_maps.front()));
      }
    }
    outputs.add("sweep_pearson.csv", csv);
  }
  const json inputs = {{"image", describe_input(f.image)},
                       {"classifier", describe_input(f.classifier)},
                       {"sampler", describe_input(f.sampler)}};
  outputs.add("manifest.json",
              manifest_text("explain", argv, sweep ? configs : configs.front(),
                            inputs, f.seed, outputs, start));
  outputs.commit(f.out);
  return kExitOk;
}

// --- fit-sampler ------------------------------------------------------------

struct FitFlags {
  std::string kind;
  std::string data;
  int k = 8;
  std::string out;
  int cells = 8;
  int levels = 4;
  int max_per_bucket = 64;
  int stride = 0;
  double jitter = 1e-2;
  std::uint64_t seed = 0;
};

int run_fit(const FitFlags& f, const std::vector<std::string>& argv) {
  const auto start = Clock::now();
  if (f.k < 1) throw UsageError("--K must be >= 1");
  if (f.kind != "gaussian" && f.kind != "empirical") {
    throw UsageError("--kind must be gaussian or empirical");
  }
  if (f.stride < 0 || f.stride > f.k) {
    throw UsageError("--stride must lie in [0, K]");
  }
  const auto paths = list_images(f.data);
  const auto images = load_images(paths);
  std::string bytes;
  std::string id;
  json config = {{"kind", f.kind},
                 {"K", f.k},
                 {"cells", f.cells},
                 {"stride", f.stride > 0 ? f.stride : f.k}};
  if (f.kind == "gaussian") {
    const auto model =
        fit_conditional_gaussian(images, f.k, {f.cells, f.jitter, f.stride});
    bytes = serialize_sampler(model);
    id = model.id();
    config["jitter"] = f.jitter;
  } else {
    EmpiricalConfig cfg;
    cfg.descriptor = {f.cells, f.levels};
    cfg.max_patches_per_bucket = f.max_per_bucket;
    cfg.stride = f.stride;
    cfg.seed = f.seed;
    const auto model = build_empirical_sampler(images, f.k, cfg);
    bytes = serialize_sampler(model);
    id = model.id();
    config["levels"] = f.levels;
    config["max_per_bucket"] = f.max_per_bucket;
  }
  config["sampler"] = id;
  config["training_images"] = paths.size();
  const fs::path out(f.out);
  OutputSet outputs;
  outputs.add(out.filename().string(), bytes);
  outputs.add(out.filename().string() + ".manifest.json",
              manifest_text("fit-sampler", argv, config,
                            {{"data", describe_input(f.data)}}, f.seed, outputs,
                            start));
  outputs.commit(out.parent_path().empty() ? fs::path(".") : out.parent_path());
  return kExitOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateFlags {
  std::string image;
  std::string map;
  std::string classifier;
  int class_index = -1;
  std::string order = "descending";
  bool only_negative = false;
  std::string fill = "mean";
  std::string data;
  int steps = 100;
  std::uint64_t seed = 0;
  std::string out;
};

int run_evaluate(const EvaluateFlags& f, const std::vector<std::string>& argv) {
  const auto start = Clock::now();
  if (f.steps < 1) throw UsageError("--steps must be >= 1");
  if (f.order != "descending" && f.order != "ascending") {
    throw UsageError("--order must be descending or ascending");
  }
  const Image image = load_image(f.image);
  const AttributionMap map = load_map(f.map);
  const auto classifier = open_classifier(f.classifier);

  CurveOptions options;
  options.order = f.order == "ascending" ? RemovalOrder::kAscending
                                         : RemovalOrder::kDescending;
  options.only_negative = f.only_negative;
  options.steps = f.steps;
  std::unique_ptr<Sampler> fill_sampler;
  json fill_desc;
  if (f.fill == "mean") {
    std::vector<Image> dataset;
    if (!f.data.empty()) {
      dataset = load_images(list_images(f.data));
    } else {
      dataset.push_back(image);
    }
    const auto mean = dataset_mean_fill(dataset);
    options.fill = ConstantFill{mean};
    fill_desc = {{"kind", "mean"}, {"value", mean}};
  } else if (f.fill == "gray") {
    options.fill = ConstantFill{{128}};
    fill_desc = {{"kind", "constant"}, {"value", 128}};
  } else if (f.fill.starts_with("sampler:")) {
    const int k = map.meta.patch_size > 0 ? map.meta.patch_size : 8;
    fill_sampler = open_sampler(f.fill.substr(8), k, image.channels());
    options.fill = SamplerFill{fill_sampler.get(), f.seed};
    fill_desc = {{"kind", "sampler"}, {"sampler", fill_sampler->id()}};
  } else {
    const long long v = parse_integer(f.fill, "--fill");
    if (v < 0 || v > 255) throw UsageError("--fill byte must lie in [0, 255]");
    options.fill = ConstantFill{{static_cast<std::uint8_t>(v)}};
    fill_desc = {{"kind", "constant"}, {"value", v}};
  }

  int class_index = f.class_index;
  if (class_index < 0) {
    class_index = is_class_specific(map.kind)
                      ? map.class_index
                      : predict(*classifier, image).top_class();
  }
  const PerturbationCurve curve =
      perturbation_curve(*classifier, image, map, class_index, options);
  const double area = auc(curve);

  OutputSet outputs;
  outputs.add("curve.csv", curve_csv(curve));
  json report = {{"config",
                  {{"order", f.order},
                   {"only_negative", f.only_negative},
                   {"fill", fill_desc},
                   {"steps", f.steps},
                   {"class", class_index},
                   {"seed", f.seed}}},
                 {"map_kind", map_kind_name(map.kind)},
                 {"candidate_pixels", curve.candidate_pixels},
                 {"initial_probability", curve.probabilities.front()},
                 {"final_probability", curve.probabilities.back()},
                 {"auc", area}};
  outputs.add("report.json", report.dump(2) + "\n");
  const json inputs = {{"image", describe_input(f.image)},
                       {"map", describe_input(f.map)},
                       {"classifier", describe_input(f.classifier)}};
  outputs.add("manifest.json", manifest_text("evaluate", argv, report["config"],
                                             inputs, f.seed, outputs, start));
  outputs.commit(f.out);
  std::cout << fmt::format("auc {:.6f}\n", area);
  return kExitOk;
}

// --- sanity -----------------------------------------------------------------

struct SanityFlags {
  std::string classifier;
  std::string sampler;
  std::string images;
  std::string fractions = "0,0.25,0.5,0.75,1";
  int k = 8;
  int n = 8;
  int stride = 0;
  std::string classes = "top:1";
  std::uint64_t seed = 0;
  std::uint64_t randomize_seed = 1;
  int workers = 0;
  std::string out;
};

int run_sanity(const SanityFlags& f, const std::vector<std::string>& argv) {
  const auto start = Clock::now();
  if (f.k < 1) throw UsageError("--K must be >= 1");
  if (f.n < 1) throw UsageError("--N must be >= 1");
  if (!f.classifier.starts_with("builtin:")) {
    throw UsageError("sanity needs --classifier builtin:<linear model file>");
  }
  std::vector<double> fractions;
  for (const auto& item : split(f.fractions, ',')) {
    const double v = parse_real(item, "--fractions");
    if (!(v >= 0.0 && v <= 1.0)) {
      throw UsageError("--fractions values must lie in [0, 1]");
    }
    fractions.push_back(v);
  }
  const auto model = std::make_shared<const LinearSoftmaxModel>(
      load_linear_model(f.classifier.substr(8)));
  const auto images = load_images(list_images(f.images));
  const auto sampler = open_sampler(f.sampler, f.k, images.front().channels());
  EngineConfig config;
  config.patch_size = f.k;
  config.samples = f.n;
  config.stride = f.stride;
  config.classes = parse_classes(f.classes);
  config.seed = f.seed;
  config.workers = f.workers > 0 ? f.workers : default_workers();
  const ClassifierFactory factory =
      [&](double fraction) -> std::shared_ptr<const Classifier> {
    if (fraction == 0.0) return model;
    return std::make_shared<const LinearSoftmaxModel>(
        randomize_parameters(*model, fraction, f.randomize_seed));
  };
  const SanityReport report =
      sanity_param_randomization(factory, *sampler, images, fractions, config);
  OutputSet outputs;
  json j = to_json(report);
  j["config"]["sampler"] = sampler->id();
  j["config"]["randomize_seed"] = f.randomize_seed;
  outputs.add("sanity.json", j.dump(2) + "\n");
  outputs.add("sanity.csv", sanity_csv(report));
  const json inputs = {{"classifier", describe_input(f.classifier)},
                       {"sampler", describe_input(f.sampler)},
                       {"images", describe_input(f.images)}};
  outputs.add("manifest.json", manifest_text("sanity", argv, j["config"],
                                             inputs, f.seed, outputs, start));
  outputs.commit(f.out);
  return kExitOk;
}

// --- serve ------------------------------------------------------------------

struct ServeFlags {
  std::string classifier;
  std::string sampler;
  int k = 8;
  int channels = 3;
};

int run_serve(const ServeFlags& f) {
  if (f.classifier.empty() == f.sampler.empty()) {
    throw UsageError("serve needs exactly one of --classifier or --sampler");
  }
  if (!f.classifier.empty()) {
    const auto classifier = open_classifier(f.classifier);
    serve_classifier(*classifier, std::cin, std::cout);
  } else {
    const auto sampler = open_sampler(f.sampler, f.k, f.channels);
    serve_sampler(*sampler, std::cin, std::cout);
  }
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args);

int run_rerun(const std::string& manifest_path, const std::string& out) {
  json m;
  try {
    m = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, manifest_path + ": " + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) {
    fail(ErrorCode::kFormat, manifest_path + ": manifest lacks argv");
  }
  std::vector<std::string> argv = m["argv"].get<std::vector<std::string>>();
  if (!out.empty()) {
    auto it = std::find(argv.begin(), argv.end(), "--out");
    if (it != argv.end() && std::next(it) != argv.end()) {
      *std::next(it) = out;
    } else {
      argv.push_back("--out");
      argv.push_back(out);
    }
  }
  argv.insert(argv.begin(), "infoattr");
  return dispatch(argv);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{
      "Information-theoretic attribution maps for black-box "
      "classifiers"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  ExplainFlags ex;
  auto* explain_cmd =
      app.add_subcommand("explain", "Compute PMI and IG maps for one image");
  explain_cmd->add_option("--image", ex.image, "Input image (PNG/PPM/PGM)")
      ->required();
  explain_cmd
      ->add_option("--classifier", ex.classifier,
                   "builtin:<file> | exec:<command> | tcp:<host:port>")
      ->required();
  explain_cmd
      ->add_option("--sampler", ex.sampler,
                   "Sampler file | reference:<byte> | identity | exec:<cmd> | "
                   "tcp:<addr>; {K} expands to the patch size")
      ->required();
  explain_cmd->add_option("--K", ex.k, "Patch size, or a comma list to sweep");
  explain_cmd->add_option("--N", ex.n, "MC samples, or a comma list to sweep");
  explain_cmd->add_option("--stride", ex.stride, "Patch stride (0 = K)");
  explain_cmd->add_option("--classes", ex.classes, "top:<k> or i,j,...");
  explain_cmd->add_option("--eps", ex.eps, "Stabilizer inside the log");
  explain_cmd->add_option("--seed", ex.seed, "Base seed");
  explain_cmd->add_option("--workers", ex.workers,
                          "Worker threads (default: INFOATTR_WORKERS or all "
                          "cores)");
  explain_cmd->add_option("--alpha", ex.alpha, "Overlay opacity");
  explain_cmd->add_option("--out", ex.out, "Output directory")->required();

  FitFlags fit;
  auto* fit_cmd =
      app.add_subcommand("fit-sampler", "Fit a patch sampler to images");
  fit_cmd->add_option("--kind", fit.kind, "gaussian | empirical")->required();
  fit_cmd->add_option("--data", fit.data, "Directory of training images")
      ->required();
  fit_cmd->add_option("--K", fit.k, "Patch size");
  fit_cmd->add_option("--out", fit.out, "Output sampler file")->required();
  fit_cmd->add_option("--cells", fit.cells, "Descriptor cells (1,2,4,8)");
  fit_cmd->add_option("--levels", fit.levels, "Descriptor quantization levels");
  fit_cmd->add_option("--max-per-bucket", fit.max_per_bucket,
                      "Dictionary bucket capacity");
  fit_cmd->add_option("--stride", fit.stride, "Training patch stride (0 = K)");
  fit_cmd->add_option("--jitter", fit.jitter, "Gaussian diagonal regularizer");
  fit_cmd->add_option("--seed", fit.seed, "Reservoir seed");

  EvaluateFlags ev;
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "Deletion / negative-evidence curve and AUC for a map");
  eval_cmd->add_option("--image", ev.image, "Input image")->required();
  eval_cmd->add_option("--map", ev.map, "Attribution map JSON")->required();
  eval_cmd->add_option("--classifier", ev.classifier, "Classifier spec")
      ->required();
  eval_cmd->add_option("--class", ev.class_index,
                       "Tracked class (default: map class or top-1)");
  eval_cmd->add_option("--order", ev.order, "descending | ascending");
  eval_cmd->add_flag("--only-negative", ev.only_negative,
                     "Remove only negative-attribution pixels");
  eval_cmd->add_option("--fill", ev.fill,
                       "mean | gray | <byte> | sampler:<spec>");
  eval_cmd->add_option(
      "--data", ev.data,
      "Image directory for the mean fill (default: the image)");
  eval_cmd->add_option("--steps", ev.steps, "Removal steps");
  eval_cmd->add_option("--seed", ev.seed, "Seed for sampler in-fill");
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();

  SanityFlags sa;
  auto* sanity_cmd = app.add_subcommand(
      "sanity", "Parameter-randomization sanity check for a linear model");
  sanity_cmd
      ->add_option("--classifier", sa.classifier, "builtin:<linear model file>")
      ->required();
  sanity_cmd->add_option("--sampler", sa.sampler, "Sampler spec")->required();
  sanity_cmd->add_option("--images", sa.images, "Directory of images")
      ->required();
  sanity_cmd->add_option("--fractions", sa.fractions,
                         "Comma list of randomized fractions (must include 0 "
                         "and 1)");
  sanity_cmd->add_option("--K", sa.k, "Patch size");
  sanity_cmd->add_option("--N", sa.n, "MC samples");
  sanity_cmd->add_option("--stride", sa.stride, "Patch stride (0 = K)");
  sanity_cmd->add_option("--classes", sa.classes, "top:<k> or i,j,...");
  sanity_cmd->add_option("--seed", sa.seed, "Base seed");
  sanity_cmd->add_option("--randomize-seed", sa.randomize_seed,
                         "Seed for parameter randomization");
  sanity_cmd->add_option("--workers", sa.workers, "Worker threads");
  sanity_cmd->add_option("--out", sa.out, "Output directory")->required();

  ServeFlags sv;
  auto* serve_cmd = app.add_subcommand(
      "serve", "Serve a classifier or sampler over stdin/stdout");
  serve_cmd->add_option("--classifier", sv.classifier, "Classifier spec");
  serve_cmd->add_option("--sampler", sv.sampler, "Sampler spec");
  serve_cmd->add_option("--K", sv.k, "Patch size for reference/identity");
  serve_cmd->add_option("--channels", sv.channels,
                        "Channels for reference/identity");

  std::string manifest;
  std::string rerun_out;
  auto* rerun_cmd =
      app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
  rerun_cmd->add_option("--manifest", manifest, "manifest.json")->required();
  rerun_cmd->add_option("--out", rerun_out, "Override the output location");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const std::vector<std::string> recorded(args.begin() + 1, args.end());
  if (*explain_cmd) return run_explain(ex, recorded);
  if (*fit_cmd) return run_fit(fit, recorded);
  if (*eval_cmd) return run_evaluate(ev, recorded);
  if (*sanity_cmd) return run_sanity(sa, recorded);
  if (*serve_cmd) return run_serve(sv);
  if (*rerun_cmd) return run_rerun(manifest, rerun_out);
  return kExitUsage;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const UsageError& e) {
    std::cerr << "infoattr: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "infoattr: " << error_code_name(e.code()) << ": " << e.what()
              << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "infoattr: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace infoattr::cli
