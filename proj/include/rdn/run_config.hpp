#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdn/config.hpp"
#include "rdn/degrade.hpp"
#include "rdn/kv.hpp"
#include "rdn/trainer.hpp"

namespace rdn {

// Flat key=value run description. Values are kept verbatim (so that
// parse -> serialize -> parse is a fixed point) and interpreted on demand.
struct RunConfig {
  std::map<std::string, std::string> values;

  // The full key schema; anything else is rejected at parse time.
  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        // task
        "task",
        // model
        "d", "c", "g", "g0", "scale", "cm", "lrl", "gff",
        // training
        "batch", "patch", "lr0", "halve_every", "iters_per_epoch",
        "max_epochs", "seed",
        // data
        "train_dir", "test_dir", "degradation", "sigma",
        // io
        "ckpt_dir", "report_path",
    };
    return keys;
  }

  static bool is_known(const std::string& key) {
    for (const std::string& k : known_keys()) {
      if (k == key) return true;
    }
    return false;
  }

  static RunConfig parse_text(const std::string& text) {
    RunConfig rc;
    for (const auto& [k, v] : kv::parse(text)) {
      if (!is_known(k)) {
        throw ConfigError("unknown config key '" + k + "'");
      }
      if (!rc.values.emplace(k, v).second) {
        throw ConfigError("duplicate config key '" + k + "'");
      }
    }
    return rc;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str());
  }

  // Keys in schema order, values verbatim.
  std::string serialize() const {
    std::string out;
    for (const std::string& k : known_keys()) {
      auto it = values.find(k);
      if (it != values.end()) out += k + "=" + it->second + "\n";
    }
    return out;
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) {
      throw ConfigError("missing required config key '" + key + "'");
    }
    return it->second;
  }

  long long get_int(const std::string& key) const {
    return kv::to_int(key, get(key));
  }
  double get_real(const std::string& key) const {
    return kv::to_real(key, get(key));
  }
  bool get_bool(const std::string& key) const {
    return kv::to_bool(key, get(key));
  }
  std::uint64_t get_u64(const std::string& key) const {
    return kv::to_u64(key, get(key));
  }

  long long get_int_or(const std::string& key, long long dflt) const {
    return has(key) ? get_int(key) : dflt;
  }
  double get_real_or(const std::string& key, double dflt) const {
    return has(key) ? get_real(key) : dflt;
  }
  bool get_bool_or(const std::string& key, bool dflt) const {
    return has(key) ? get_bool(key) : dflt;
  }

  std::string task() const {
    const std::string t = get("task");
    if (t != "sr" && t != "dn" && t != "car" && t != "deblur") {
      throw ConfigError("task must be sr|dn|car|deblur, got '" + t + "'");
    }
    return t;
  }

  // Model description from the task and model keys. Channel counts follow
  // the task: SR and deblurring run on RGB, denoising and CAR on gray.
  RdnConfig model_config() const {
    const std::string t = task();
    RdnConfig cfg;
    cfg.d_blocks = static_cast<int>(get_int("d"));
    cfg.c_layers = static_cast<int>(get_int("c"));
    cfg.growth = static_cast<int>(get_int("g"));
    cfg.g0 = static_cast<int>(get_int("g0"));
    cfg.ablation.cm = get_bool_or("cm", true);
    cfg.ablation.lrl = get_bool_or("lrl", true);
    cfg.ablation.gff = get_bool_or("gff", true);
    if (t == "sr") {
      cfg.topology = Topology::SR;
      cfg.scale = static_cast<int>(get_int("scale"));
      cfg.in_channels = cfg.out_channels = 3;
    } else {
      cfg.topology = Topology::SameRes;
      cfg.scale = 1;
      if (has("scale") && get_int("scale") != 1) {
        throw ConfigError("task '" + t + "' runs at scale 1; drop the scale key");
      }
      const int ch = (t == "deblur") ? 3 : 1;
      cfg.in_channels = cfg.out_channels = ch;
    }
    cfg.validate();
    return cfg;
  }

  TrainConfig train_config() const {
    TrainConfig tc;
    tc.batch = static_cast<int>(get_int_or("batch", tc.batch));
    tc.patch_lq = static_cast<int>(get_int_or("patch", tc.patch_lq));
    tc.lr0 = get_real_or("lr0", tc.lr0);
    tc.halve_every = static_cast<int>(get_int_or("halve_every", tc.halve_every));
    tc.iters_per_epoch =
        static_cast<int>(get_int_or("iters_per_epoch", tc.iters_per_epoch));
    tc.max_epochs = static_cast<int>(get_int_or("max_epochs", tc.max_epochs));
    tc.seed = has("seed") ? get_u64("seed") : 0;
    tc.validate();
    return tc;
  }

  // The degradation described by the data keys. "none" (pre-paired data)
  // has no DegradationSpec; callers check degradation_is_none() first.
  bool degradation_is_none() const { return get("degradation") == "none"; }

  DegradationSpec degradation_spec() const {
    const std::string name = get("degradation");
    if (name == "none") {
      throw ConfigError("degradation=none has no synthetic degradation");
    }
    const DegradationKind kind = parse_degradation(name);
    DegradationSpec spec;
    spec.kind = kind;
    switch (kind) {
      case DegradationKind::BI:
        spec = DegradationSpec::bi(static_cast<int>(get_int("scale")));
        break;
      case DegradationKind::BD:
        spec = DegradationSpec::bd();
        spec.scale = static_cast<int>(get_int_or("scale", 3));
        break;
      case DegradationKind::DN:
        spec = DegradationSpec::dn();
        spec.scale = static_cast<int>(get_int_or("scale", 3));
        spec.sigma_noise = get_real_or("sigma", 30.0);
        break;
      case DegradationKind::AWGN:
        spec = DegradationSpec::awgn(get_real("sigma"));
        break;
      case DegradationKind::DEBLUR:
        spec = DegradationSpec::deblur();
        spec.sigma_noise = get_real_or("sigma", 2.0);
        break;
    }
    if ((kind == DegradationKind::BI || kind == DegradationKind::BD) &&
        has("sigma") && get_real("sigma") != 0.0) {
      throw ConfigError("degradation '" + name + "' takes no sigma");
    }
    spec.seed = has("seed") ? get_u64("seed") : 0;
    spec.validate();
    return spec;
  }

  // The degradation matching each task's training setup.
  void check_task_degradation() const {
    const std::string t = task();
    const std::string d = get("degradation");
    const bool ok = (t == "sr" && (d == "bi" || d == "bd" || d == "dn")) ||
                    (t == "dn" && d == "awgn") ||
                    (t == "deblur" && d == "deblur") ||
                    (t == "car" && d == "none");
    if (!ok) {
      throw ConfigError("task '" + t + "' does not pair with degradation '" +
                        d + "'");
    }
  }
};

}  // namespace rdn
