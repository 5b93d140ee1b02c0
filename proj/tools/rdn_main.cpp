// Command-line front end: degrade / train / infer / eval / count-params /
// gradcheck. Diagnostics go to stderr; data goes to files (or stdout for
// reports when no report path is configured).

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rdn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"residual dense network for image restoration"};
  app.require_subcommand(1);

  std::string deg_config, deg_hq, deg_lq;
  std::uint64_t deg_seed = 0;
  CLI::App* deg = app.add_subcommand(
      "degrade", "generate LQ images from an HQ directory");
  deg->add_option("--config", deg_config, "run config file")->required();
  deg->add_option("hq_dir", deg_hq, "input HQ directory")->required();
  deg->add_option("lq_dir", deg_lq, "output LQ directory")->required();
  CLI::Option* deg_seed_opt =
      deg->add_option("--seed", deg_seed, "override the config seed");

  std::string train_config, train_resume;
  std::uint64_t train_seed = 0;
  CLI::App* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", train_config, "run config file")->required();
  tr->add_option("--resume", train_resume, "checkpoint to resume from");
  CLI::Option* train_seed_opt =
      tr->add_option("--seed", train_seed, "override the config seed");

  std::string inf_ckpt, inf_in, inf_out;
  bool inf_ensemble = false;
  CLI::App* inf = app.add_subcommand("infer", "restore one image");
  inf->add_option("checkpoint", inf_ckpt, "model checkpoint")->required();
  inf->add_option("input", inf_in, "input image")->required();
  inf->add_option("output", inf_out, "output image")->required();
  inf->add_flag("--ensemble", inf_ensemble, "x8 self-ensemble");

  std::string eval_pred, eval_gt, eval_config;
  int eval_shave = 0;
  CLI::App* ev = app.add_subcommand("eval", "PSNR/SSIM report over two dirs");
  ev->add_option("pred_dir", eval_pred, "predictions")->required();
  ev->add_option("gt_dir", eval_gt, "ground truth")->required();
  ev->add_option("--shave", eval_shave, "border pixels to ignore")
      ->check(CLI::NonNegativeNumber);
  ev->add_option("--config", eval_config,
                 "run config (report_path sends the CSV to a file)");

  std::string cp_config;
  CLI::App* cp = app.add_subcommand("count-params",
                                    "closed-form and constructed counts");
  cp->add_option("--config", cp_config, "run config file")->required();

  std::string gc_config;
  bool gc_tiny = false, gc_corrupt = false;
  std::uint64_t gc_seed = 0;
  CLI::App* gc = app.add_subcommand("gradcheck",
                                    "finite-difference gradient verification");
  gc->add_option("--config", gc_config, "run config file (model keys)");
  gc->add_flag("--tiny", gc_tiny, "use the built-in tiny model");
  gc->add_option("--seed", gc_seed, "probe seed");
  gc->add_flag("--corrupt-backward", gc_corrupt,
               "test hook: falsify one gradient to force failure")
      ->group("");  // hidden

  CLI11_PARSE(app, argc, argv);

  try {
    if (*deg) {
      std::optional<std::uint64_t> seed;
      if (deg_seed_opt->count() > 0) seed = deg_seed;
      return rdn::cli::cmd_degrade(rdn::RunConfig::load(deg_config), deg_hq,
                                   deg_lq, seed);
    }
    if (*tr) {
      std::optional<std::uint64_t> seed;
      if (train_seed_opt->count() > 0) seed = train_seed;
      return rdn::cli::cmd_train(rdn::RunConfig::load(train_config),
                                 train_resume, seed);
    }
    if (*inf) {
      return rdn::cli::cmd_infer(inf_ckpt, inf_in, inf_out, inf_ensemble);
    }
    if (*ev) {
      std::string report_path;
      if (!eval_config.empty()) {
        const rdn::RunConfig rc = rdn::RunConfig::load(eval_config);
        if (rc.has("report_path")) report_path = rc.get("report_path");
      }
      return rdn::cli::cmd_eval(eval_pred, eval_gt, eval_shave, report_path);
    }
    if (*cp) {
      return rdn::cli::cmd_count_params(rdn::RunConfig::load(cp_config));
    }
    if (*gc) {
      std::optional<rdn::RunConfig> rc;
      if (!gc_config.empty()) rc = rdn::RunConfig::load(gc_config);
      return rdn::cli::cmd_gradcheck(rc, gc_tiny, gc_seed, gc_corrupt);
    }
  } catch (const rdn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
