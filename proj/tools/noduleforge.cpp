// Copyright 2026 The NoduleForge Authors.
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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "noduleforge/cli/run_config.hpp"
#include "noduleforge/core/error.hpp"
#include "noduleforge/detect/detector.hpp"
#include "noduleforge/eval/froc.hpp"
#include "noduleforge/io/config_file.hpp"
#include "noduleforge/io/metaimage.hpp"
#include "noduleforge/io/tables.hpp"
#include "noduleforge/model/model_file.hpp"
#include "noduleforge/phantom/phantom.hpp"
#include "noduleforge/preprocess/lung_mask.hpp"
#include "noduleforge/train/samples.hpp"
#include "noduleforge/train/tasks.hpp"
#include "noduleforge/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace noduleforge;

namespace {

constexpr int kExitUsage = 2;
constexpr const char* kAnnotationsFile = "annotations.csv";
constexpr const char* kManifestFile = "manifest.csv";

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return 3;
    case ErrorKind::kShapeMismatch: return 4;
    case ErrorKind::kMissingInput: return 5;
    case ErrorKind::kSchemaMismatch: return 6;
    case ErrorKind::kIo: return 7;
    case ErrorKind::kDiverged: return 8;
    case ErrorKind::kPlacement: return 9;
  }
  return 1;
}

void report_error(std::string_view kind, std::string message) {
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error kind=" << kind << " message=\"" << message << "\"\n";
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("noduleforge"));
  const char* env = std::getenv("NODULEFORGE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");
}

/// Flags shared by every subcommand; set values override the config file.
struct CommonOptions {
  std::string config;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> stride;
  std::optional<double> threshold;
  std::string out;
};

void add_common(CLI::App* app, CommonOptions& o, bool out_required) {
  app->add_option("--config", o.config, "key = value settings file")->check(CLI::ExistingFile);
  app->add_option("--workers", o.workers, "worker threads (1 is fully deterministic)");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--stride", o.stride, "sliding-window stride in voxels");
  app->add_option("--threshold", o.threshold, "PRN candidate threshold");
  auto* out = app->add_option("--out", o.out, "output path");
  if (out_required) out->required();
}

ConfigFile resolve(const CommonOptions& o) {
  ConfigFile c = o.config.empty() ? ConfigFile{} : ConfigFile::load(o.config);
  if (o.workers) c.set("workers", std::to_string(*o.workers));
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  if (o.stride) c.set("detect.stride", std::to_string(*o.stride));
  if (o.threshold) c.set("detect.threshold", fmt::format("{}", *o.threshold));
  return c;
}

void log_config(const std::string& command, const ConfigFile& c) {
  spdlog::info("{}: resolved config", command);
  for (const auto& [key, value] : c.entries()) spdlog::info("  {} = {}", key, value);
}

void require_dir(const fs::path& p, const std::string& what) {
  require(fs::is_directory(p), ErrorKind::kMissingInput, what + " is not a directory: " + p.string());
}

void require_file(const fs::path& p, const std::string& what) {
  require(fs::is_regular_file(p), ErrorKind::kMissingInput, what + " not found: " + p.string());
}

std::vector<Annotation> annotations_in(const fs::path& dir) {
  const fs::path p = dir / kAnnotationsFile;
  return fs::exists(p) ? read_annotations(p) : std::vector<Annotation>{};
}

std::vector<ScanData> load_preprocessed(const fs::path& dir) {
  require_dir(dir, "data");
  auto scans = load_scans(dir, annotations_in(dir));
  require(!scans.empty(), ErrorKind::kMissingInput, "no preprocessed scans in " + dir.string());
  return scans;
}

/// Raw volumes listed by a manifest, or every .mhd header in the directory.
std::vector<fs::path> raw_volumes(const fs::path& dir) {
  require_dir(dir, "data");
  std::vector<fs::path> paths;
  if (fs::exists(dir / kManifestFile)) {
    for (const auto& e : read_manifest(dir / kManifestFile)) paths.push_back(e.path);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".mhd") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
  }
  require(!paths.empty(), ErrorKind::kMissingInput, "no volumes in " + dir.string());
  for (const auto& p : paths) require_file(p, "volume");
  return paths;
}

bool is_preprocessed(const fs::path& dir) {
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().ends_with("_mask.mhd")) return true;
  }
  return false;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

// Subcommands.

void run_phantom(const ConfigFile& c, std::size_t n, const fs::path& out) {
  const auto entries = generate_suite(n, phantom_spec(c), seed_of(c), out, workers_of(c));
  spdlog::info("phantom: wrote {} volumes to {}", entries.size(), out.string());
}

void run_preprocess(const ConfigFile& c, const fs::path& data, const fs::path& out) {
  const auto paths = raw_volumes(data);
  fs::create_directories(out);
  for (const auto& p : paths) {
    const Volume raw = read_metaimage(p);
    Mask3 mask;
    const Volume v = preprocess_scan(raw, workers_of(c), &mask);
    write_metaimage(v, out / (v.series_id + ".mhd"), MetaElementType::kFloat32);
    write_metaimage(mask_as_volume(v, mask), out / (v.series_id + "_mask.mhd"),
                    MetaElementType::kUInt8);
    spdlog::info("preprocess: {}", v.series_id);
  }
  if (fs::exists(data / kAnnotationsFile)) {
    fs::copy_file(data / kAnnotationsFile, out / kAnnotationsFile,
                  fs::copy_options::overwrite_existing);
  }
}

void run_train_prn(const ConfigFile& c, const fs::path& data, const fs::path& out) {
  const auto scans = load_preprocessed(data);
  const PrnConfig model = prn_model_config(c);
  const TrainConfig train = train_config(c, "prn.");
  spdlog::info("train-prn: {}", train.describe());
  auto trained = train_prn(scans, model, train);
  ensure_parent(out);
  save_prn(out, trained.graph, model);
  write_history(sibling(out, "_history.csv"), trained.result, train.seed);
  spdlog::info("train-prn: best epoch {} metric {:.6f}", trained.result.best_epoch,
               trained.result.best_metric);
}

void run_train_hsn(const ConfigFile& c, const fs::path& data, const fs::path& out) {
  const auto scans = load_preprocessed(data);
  const HsnConfig model = hsn_model_config(c);
  const TrainConfig train = train_config(c, "hsn.");
  spdlog::info("train-hsn: {}", train.describe());
  auto trained = train_hsn(scans, model, train);
  ensure_parent(out);
  save_hsn(out, trained.graph, model);
  write_history(sibling(out, "_history.csv"), trained.result, train.seed);
  spdlog::info("train-hsn: best epoch {} accuracy {:.4f}", trained.result.best_epoch,
               trained.result.best_metric);
}

void run_detect(const ConfigFile& c, const fs::path& data, const fs::path& prn_path,
                const fs::path& hsn_path, const fs::path& out) {
  require_dir(data, "data");
  require_file(prn_path, "PRN checkpoint");
  require_file(hsn_path, "HSN checkpoint");
  const auto prn = load_prn(prn_path);
  const auto hsn = load_hsn(hsn_path);
  const DetectorConfig dc = detector_config(c, prn.config.patch);
  std::vector<CandidateRecord> nodules, candidates;
  auto collect = [&](const Detection& d) {
    for (const auto& n : d.nodules) nodules.push_back(to_record(n));
    for (const auto& n : d.prn_candidates) candidates.push_back(to_record(n));
    spdlog::info("detect: {} candidates, {} nodules", d.prn_candidates.size(), d.nodules.size());
  };
  if (is_preprocessed(data)) {
    for (const auto& scan : load_preprocessed(data)) {
      collect(detect_preprocessed(scan.volume, scan.mask, prn.graph, hsn.graph, dc));
    }
  } else {
    for (const auto& p : raw_volumes(data)) collect(detect(read_metaimage(p), prn.graph, hsn.graph, dc));
  }
  ensure_parent(out);
  write_candidates(nodules, out);
  write_candidates(candidates, sibling(out, "_prn.csv"));
}

std::vector<std::string> scan_ids(const fs::path& scans) {
  std::vector<std::string> ids;
  if (scans.empty()) return ids;
  if (fs::is_directory(scans)) {
    const fs::path manifest = scans / kManifestFile;
    if (fs::exists(manifest)) {
      for (const auto& e : read_manifest(manifest)) ids.push_back(e.series_id);
    } else {
      std::set<std::string> found;
      for (const auto& e : fs::directory_iterator(scans)) {
        const std::string name = e.path().filename().string();
        if (e.path().extension() == ".mhd" && !name.ends_with("_mask.mhd")) {
          found.insert(e.path().stem().string());
        }
      }
      ids.assign(found.begin(), found.end());
    }
  } else {
    require_file(scans, "scan list");
    for (const auto& e : read_manifest(scans)) ids.push_back(e.series_id);
  }
  require(!ids.empty(), ErrorKind::kMissingInput, "no scans listed in " + scans.string());
  return ids;
}

void run_evaluate(const ConfigFile& c, const fs::path& candidates, const fs::path& annotations,
                  const fs::path& scans, const fs::path& out) {
  require_file(candidates, "candidates");
  require_file(annotations, "annotations");
  const auto result =
      evaluate_froc(read_candidates(candidates), read_annotations(annotations), scan_ids(scans),
                    static_cast<std::size_t>(c.get_int("evaluate.n_boot", 1000)), seed_of(c));
  std::cout << format_score(result) << std::endl;
  const auto& s = result.curve.sensitivities;
  spdlog::info("evaluate: {} scans, {} nodules, {} hits, diameter MAE {:.3f} mm", result.n_scans,
               result.n_nodules, result.n_hits, result.diameter_mae);
  spdlog::info("evaluate: sensitivity at 1/8..8 FP/scan {:.3f} {:.3f} {:.3f} {:.3f} {:.3f} {:.3f} {:.3f}",
               s[0], s[1], s[2], s[3], s[4], s[5], s[6]);
  if (!out.empty()) {
    ensure_parent(out);
    write_froc_table(out, result.curve);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Pulmonary nodule detection on CT volumes"};
  app.require_subcommand(1);

  CommonOptions phantom_o, pre_o, prn_o, hsn_o, det_o, eval_o;
  std::size_t n_phantoms = 1;
  std::string pre_data, prn_data, hsn_data, det_data, det_prn, det_hsn;
  std::string ev_candidates, ev_annotations, ev_scans;

  auto* phantom = app.add_subcommand("phantom", "generate a synthetic phantom suite");
  add_common(phantom, phantom_o, true);
  phantom->add_option("--n", n_phantoms, "number of volumes");

  auto* pre = app.add_subcommand("preprocess", "resample, segment and mask raw volumes");
  add_common(pre, pre_o, true);
  pre->add_option("--data", pre_data, "directory of raw volumes")->required();

  auto* tprn = app.add_subcommand("train-prn", "train the candidate network");
  add_common(tprn, prn_o, true);
  tprn->add_option("--data", prn_data, "directory of preprocessed volumes")->required();

  auto* thsn = app.add_subcommand("train-hsn", "train the candidate classifier");
  add_common(thsn, hsn_o, true);
  thsn->add_option("--data", hsn_data, "directory of preprocessed volumes")->required();

  auto* det = app.add_subcommand("detect", "detect nodules");
  add_common(det, det_o, true);
  det->add_option("--data", det_data, "directory of raw or preprocessed volumes")->required();
  det->add_option("--prn", det_prn, "PRN checkpoint")->required();
  det->add_option("--hsn", det_hsn, "HSN checkpoint")->required();

  auto* ev = app.add_subcommand("evaluate", "FROC score of a candidate table");
  add_common(ev, eval_o, false);
  ev->add_option("--candidates", ev_candidates, "candidate CSV")->required();
  ev->add_option("--annotations", ev_annotations, "annotation CSV")->required();
  ev->add_option("--scans", ev_scans, "manifest or volume directory listing evaluated scans");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  try {
    auto run = [](const std::string& name, const CommonOptions& o, auto&& body) {
      const ConfigFile c = resolve(o);
      log_config(name, c);
      body(c);
    };
    if (*phantom) {
      run("phantom", phantom_o, [&](const ConfigFile& c) { run_phantom(c, n_phantoms, phantom_o.out); });
    } else if (*pre) {
      run("preprocess", pre_o, [&](const ConfigFile& c) { run_preprocess(c, pre_data, pre_o.out); });
    } else if (*tprn) {
      run("train-prn", prn_o, [&](const ConfigFile& c) { run_train_prn(c, prn_data, prn_o.out); });
    } else if (*thsn) {
      run("train-hsn", hsn_o, [&](const ConfigFile& c) { run_train_hsn(c, hsn_data, hsn_o.out); });
    } else if (*det) {
      run("detect", det_o,
          [&](const ConfigFile& c) { run_detect(c, det_data, det_prn, det_hsn, det_o.out); });
    } else if (*ev) {
      run("evaluate", eval_o, [&](const ConfigFile& c) {
        run_evaluate(c, ev_candidates, ev_annotations, ev_scans, eval_o.out);
      });
    }
  } catch (const Error& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
