#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rdn/checkpoint.hpp"
#include "rdn/degrade.hpp"
#include "rdn/gradcheck.hpp"
#include "rdn/image_io.hpp"
#include "rdn/metrics.hpp"
#include "rdn/model.hpp"
#include "rdn/parallel.hpp"
#include "rdn/run_config.hpp"
#include "rdn/trainer.hpp"

namespace rdn {
namespace cli {

namespace fs = std::filesystem;

// Sorted image filenames (not paths) directly inside dir.
inline std::vector<std::string> list_images(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw InputError("'" + dir + "' is not a directory");
  }
  std::vector<std::string> names;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_path(e.path().filename().string())) {
      names.push_back(e.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

// Batch degradation: every image in hq_dir lands in lq_dir under the same
// name. Noise streams are seeded per file name, so results do not depend on
// worker count or file order. Files that fail are reported individually and
// turn the exit code nonzero without stopping the rest.
inline int cmd_degrade(const RunConfig& rc, const std::string& hq_dir,
                       const std::string& lq_dir,
                       std::optional<std::uint64_t> seed_override,
                       std::ostream& err = std::cerr) {
  DegradationSpec spec = rc.degradation_spec();
  if (seed_override) spec.seed = *seed_override;
  const std::vector<std::string> names = list_images(hq_dir);
  if (names.empty()) {
    err << "warning: no images found in '" << hq_dir << "'\n";
    return 0;
  }
  fs::create_directories(lq_dir);
  std::vector<std::string> failures(names.size());
  parallel_for(names.size(), [&](std::size_t i) {
    const std::string& name = names[i];
    try {
      DegradationSpec file_spec = spec;
      file_spec.seed = mix64(spec.seed, hash_string(name));
      Image hq = read_image((fs::path(hq_dir) / name).string());
      const bool scaled = file_spec.kind == DegradationKind::BI ||
                          file_spec.kind == DegradationKind::BD ||
                          file_spec.kind == DegradationKind::DN;
      if (scaled) hq = crop_to_multiple(hq, file_spec.scale);
      const Image lq = degrade(hq, file_spec);
      write_image((fs::path(lq_dir) / name).string(), lq);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  int bad = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!failures[i].empty()) {
      err << "error: " << names[i] << ": " << failures[i] << "\n";
      ++bad;
    }
  }
  return bad == 0 ? 0 : 1;
}

namespace detail {

// Loads the training manifest. With a synthetic degradation the LQ side is
// generated here, seeded per file name. degradation=none expects hq/ and
// lq/ subdirectories with matching names (externally prepared pairs, e.g.
// JPEG-compressed inputs for the CAR task).
inline std::vector<TrainPair> load_train_data(const RunConfig& rc,
                                              const RdnConfig& mcfg,
                                              std::uint64_t seed) {
  const std::string train_dir = rc.get("train_dir");
  std::vector<TrainPair> data;
  if (rc.degradation_is_none()) {
    const fs::path hq_dir = fs::path(train_dir) / "hq";
    const fs::path lq_dir = fs::path(train_dir) / "lq";
    const std::vector<std::string> names = list_images(hq_dir.string());
    if (names.empty()) {
      throw InputError("no images in '" + hq_dir.string() + "'");
    }
    for (const std::string& name : names) {
      const fs::path lq_path = lq_dir / name;
      if (!fs::exists(lq_path)) {
        throw InputError("missing LQ pair '" + lq_path.string() + "'");
      }
      TrainPair p;
      p.name = name;
      p.hq = image_to_tensor(read_image((hq_dir / name).string()));
      p.lq = image_to_tensor(read_image(lq_path.string()));
      data.push_back(std::move(p));
    }
    return data;
  }
  DegradationSpec spec = rc.degradation_spec();
  const std::vector<std::string> names = list_images(train_dir);
  if (names.empty()) throw InputError("no images in '" + train_dir + "'");
  data.resize(names.size());
  parallel_for(names.size(), [&](std::size_t i) {
    const std::string& name = names[i];
    DegradationSpec file_spec = spec;
    file_spec.seed = mix64(mix64(seed, 0x64617461), hash_string(name));
    Image hq = read_image((fs::path(train_dir) / name).string());
    if (mcfg.scale > 1) hq = crop_to_multiple(hq, mcfg.scale);
    if (hq.c != mcfg.in_channels) {
      throw InputError("'" + name + "' has " + std::to_string(hq.c) +
                       " channels, the model expects " +
                       std::to_string(mcfg.in_channels));
    }
    const Image lq = degrade(hq, file_spec);
    data[i].name = name;
    data[i].hq = image_to_tensor(hq);
    data[i].lq = image_to_tensor(lq);
  });
  return data;
}

}  // namespace detail

inline int cmd_train(const RunConfig& rc, const std::string& resume_path,
                     std::optional<std::uint64_t> seed_override,
                     std::ostream& err = std::cerr) {
  const RdnConfig mcfg = rc.model_config();
  rc.check_task_degradation();
  TrainConfig tcfg = rc.train_config();
  if (seed_override) tcfg.seed = *seed_override;
  const std::string ckpt_dir = rc.get("ckpt_dir");

  TrainOptions opts;
  opts.ckpt_dir = ckpt_dir;
  opts.loss_csv = (fs::path(ckpt_dir) / "loss_log.csv").string();
  opts.progress = &err;

  CheckpointData resume;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
    const RdnConfig& rcfg = resume.cfg;
    if (rcfg.d_blocks != mcfg.d_blocks || rcfg.c_layers != mcfg.c_layers ||
        rcfg.growth != mcfg.growth || rcfg.g0 != mcfg.g0 ||
        rcfg.scale != mcfg.scale || rcfg.topology != mcfg.topology ||
        rcfg.ablation.cm != mcfg.ablation.cm ||
        rcfg.ablation.lrl != mcfg.ablation.lrl ||
        rcfg.ablation.gff != mcfg.ablation.gff ||
        rcfg.in_channels != mcfg.in_channels ||
        rcfg.out_channels != mcfg.out_channels) {
      throw ConfigError("checkpoint '" + resume_path +
                        "' was trained with a different model config");
    }
    if (!resume.adam) {
      throw ConfigError("checkpoint '" + resume_path +
                        "' has no optimizer state; cannot resume");
    }
    opts.start_epoch = resume.epoch;
    opts.resume_params = &resume.params;
    opts.resume_adam = &resume.adam.value();
    err << "resuming from epoch " << resume.epoch << "\n";
  }

  const std::vector<TrainPair> data =
      detail::load_train_data(rc, mcfg, tcfg.seed);
  err << "training on " << data.size() << " image(s), "
      << tcfg.max_epochs - opts.start_epoch << " epoch(s) of "
      << tcfg.iters_per_epoch << " iteration(s)\n";
  fs::create_directories(ckpt_dir);
  std::ofstream cfg_copy(fs::path(ckpt_dir) / "run_config.cfg");
  cfg_copy << rc.serialize();
  cfg_copy.close();

  train(mcfg, data, tcfg, opts);
  return 0;
}

inline int cmd_infer(const std::string& ckpt_path, const std::string& in_path,
                     const std::string& out_path, bool ensemble) {
  const CheckpointData ck = load_checkpoint(ckpt_path);
  const Image input = read_image(in_path);
  if (input.c != ck.cfg.in_channels) {
    throw InputError("'" + in_path + "' has " + std::to_string(input.c) +
                     " channels, the checkpoint expects " +
                     std::to_string(ck.cfg.in_channels));
  }
  auto model = [&ck](const Image& img) {
    return tensor_to_image(
        rdn_forward(image_to_tensor(img), ck.params, ck.cfg));
  };
  const Image out = ensemble ? self_ensemble(model, input) : model(input);
  write_image(out_path, out);
  return 0;
}

inline int cmd_eval(const std::string& pred_dir, const std::string& gt_dir,
                    int shave, const std::string& report_path,
                    std::ostream& out = std::cout) {
  const std::vector<std::string> pred = list_images(pred_dir);
  const std::vector<std::string> gt = list_images(gt_dir);
  std::vector<std::string> missing_pred, missing_gt;
  for (const std::string& n : gt) {
    if (!std::binary_search(pred.begin(), pred.end(), n)) {
      missing_pred.push_back(n);
    }
  }
  for (const std::string& n : pred) {
    if (!std::binary_search(gt.begin(), gt.end(), n)) {
      missing_gt.push_back(n);
    }
  }
  if (!missing_pred.empty() || !missing_gt.empty()) {
    std::string msg = "file sets disagree;";
    for (const std::string& n : missing_pred) msg += " missing-pred:" + n;
    for (const std::string& n : missing_gt) msg += " missing-gt:" + n;
    throw InputError(msg);
  }
  if (pred.empty()) throw InputError("no images to evaluate");

  EvalReport report;
  report.rows.resize(pred.size());
  parallel_for(pred.size(), [&](std::size_t i) {
    const std::string& name = pred[i];
    Image p = read_image((fs::path(pred_dir) / name).string());
    Image g = read_image((fs::path(gt_dir) / name).string());
    if (p.c != g.c || p.h != g.h || p.w != g.w) {
      throw InputError("'" + name + "': prediction and ground truth dims disagree");
    }
    const Image py = rgb_to_y(p);
    const Image gy = rgb_to_y(g);
    EvalRow row;
    row.name = name;
    row.psnr_db = psnr(py, gy, shave);
    row.ssim_val = ssim(shave_border(py, shave), shave_border(gy, shave));
    report.rows[i] = std::move(row);
  });

  const std::string csv = report.to_csv();
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    if (!f) throw IoError("cannot open '" + report_path + "' for writing");
    f << csv;
  } else {
    out << csv;
  }
  return 0;
}

inline int cmd_count_params(const RunConfig& rc, std::ostream& out = std::cout) {
  const RdnConfig cfg = rc.model_config();
  const long long closed = count_params(cfg);
  const long long built =
      static_cast<long long>(zero_params<float>(cfg).scalar_count());
  char human[32];
  if (closed >= 1000000) {
    std::snprintf(human, sizeof(human), "%.1fM", closed / 1e6);
  } else if (closed >= 1000) {
    std::snprintf(human, sizeof(human), "%.1fK", closed / 1e3);
  } else {
    std::snprintf(human, sizeof(human), "%lld", closed);
  }
  out << "closed_form=" << closed << " constructed=" << built << " (" << human
      << ")\n";
  return closed == built ? 0 : 1;
}

// The tiny default exercised when no config is given: small enough for
// finite differences in seconds.
inline RdnConfig gradcheck_tiny_config() {
  RdnConfig cfg;
  cfg.d_blocks = 2;
  cfg.c_layers = 3;
  cfg.growth = 8;
  cfg.g0 = 8;
  cfg.scale = 2;
  cfg.topology = Topology::SR;
  cfg.in_channels = 3;
  cfg.out_channels = 3;
  return cfg;
}

inline int cmd_gradcheck(const std::optional<RunConfig>& rc, bool tiny,
                         std::uint64_t seed, bool corrupt,
                         std::ostream& out = std::cout) {
  const RdnConfig cfg =
      (rc && !tiny) ? rc->model_config() : gradcheck_tiny_config();
  const GradCheckReport rep = run_gradcheck(cfg, seed, corrupt);
  char buf[128];
  for (const GradCheckItem& it : rep.items) {
    std::snprintf(buf, sizeof(buf), "%-24s max_rel_err=%.3e  %s\n",
                  it.name.c_str(), it.max_rel_err,
                  it.pass ? "PASS" : "FAIL");
    out << buf;
  }
  return rep.all_pass() ? 0 : 1;
}

}  // namespace cli
}  // namespace rdn
