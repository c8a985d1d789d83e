#include "ckmtrack/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace ckmtrack::harness {

namespace {

std::string fmt_double(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key);
  }
  if (pos != value.size()) {
    throw std::invalid_argument("config: bad numeric value for " + key);
  }
  return x;
}

long checked_long(const std::string& key, double x) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9) {
    throw std::invalid_argument("config: " + key + " must be an integer");
  }
  return static_cast<long>(r);
}

std::string reflectors_to_string(const std::vector<env::Reflector>& rs) {
  std::string out;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(rs[i].y) + ":" + fmt_double(rs[i].loss);
  }
  return out;
}

std::vector<env::Reflector> reflectors_from_string(const std::string& s) {
  std::vector<env::Reflector> out;
  if (s.empty() || s == "none") return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument(
          "config: scene.reflectors entries must look like y:loss");
    }
    env::Reflector r;
    r.y = parse_double("scene.reflectors", item.substr(0, colon));
    r.loss = parse_double("scene.reflectors", item.substr(colon + 1));
    out.push_back(r);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct Field {
  std::string key;
  bool numeric;
  std::function<std::string(const SimConfig&)> get;
  std::function<void(SimConfig&, const std::string&)> set;
};

Field num_field(const std::string& key, double SimConfig::* member) {
  return {key, true,
          [member](const SimConfig& c) { return fmt_double(c.*member); },
          [member, key](SimConfig& c, const std::string& v) {
            c.*member = parse_double(key, v);
          }};
}

Field long_field(const std::string& key, long SimConfig::* member) {
  return {key, true,
          [member](const SimConfig& c) { return std::to_string(c.*member); },
          [member, key](SimConfig& c, const std::string& v) {
            c.*member = checked_long(key, parse_double(key, v));
          }};
}

const std::vector<Field>& field_table() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    auto add = [&t](Field f) { t.push_back(std::move(f)); };

    add({"scene.rsu_x", true,
         [](const SimConfig& c) { return fmt_double(c.scene.rsu_position[0]); },
         [](SimConfig& c, const std::string& v) {
           c.scene.rsu_position[0] = parse_double("scene.rsu_x", v);
         }});
    add({"scene.rsu_y", true,
         [](const SimConfig& c) { return fmt_double(c.scene.rsu_position[1]); },
         [](SimConfig& c, const std::string& v) {
           c.scene.rsu_position[1] = parse_double("scene.rsu_y", v);
         }});
    add({"scene.nt", true,
         [](const SimConfig& c) { return std::to_string(c.scene.nt); },
         [](SimConfig& c, const std::string& v) {
           c.scene.nt = static_cast<int>(checked_long("scene.nt", parse_double("scene.nt", v)));
         }});
    add({"scene.nr", true,
         [](const SimConfig& c) { return std::to_string(c.scene.nr); },
         [](SimConfig& c, const std::string& v) {
           c.scene.nr = static_cast<int>(checked_long("scene.nr", parse_double("scene.nr", v)));
         }});
    add({"scene.ns", true,
         [](const SimConfig& c) { return std::to_string(c.scene.ns); },
         [](SimConfig& c, const std::string& v) {
           c.scene.ns = static_cast<int>(checked_long("scene.ns", parse_double("scene.ns", v)));
         }});
    add({"scene.carrier_freq", true,
         [](const SimConfig& c) { return fmt_double(c.scene.carrier_freq); },
         [](SimConfig& c, const std::string& v) {
           c.scene.carrier_freq = parse_double("scene.carrier_freq", v);
         }});
    add({"scene.road_y", true,
         [](const SimConfig& c) { return fmt_double(c.scene.road_y); },
         [](SimConfig& c, const std::string& v) {
           c.scene.road_y = parse_double("scene.road_y", v);
         }});
    add({"scene.reflectors", false,
         [](const SimConfig& c) { return reflectors_to_string(c.scene.reflectors); },
         [](SimConfig& c, const std::string& v) {
           c.scene.reflectors = reflectors_from_string(v);
         }});
    add({"scene.reflection_coeff", true,
         [](const SimConfig& c) { return fmt_double(c.scene.reflection_coeff); },
         [](SimConfig& c, const std::string& v) {
           c.scene.reflection_coeff = parse_double("scene.reflection_coeff", v);
         }});

    add({"vehicle.qx0", true,
         [](const SimConfig& c) { return fmt_double(c.initial.qx); },
         [](SimConfig& c, const std::string& v) {
           c.initial.qx = parse_double("vehicle.qx0", v);
         }});
    add({"vehicle.qy0", true,
         [](const SimConfig& c) { return fmt_double(c.initial.qy); },
         [](SimConfig& c, const std::string& v) {
           c.initial.qy = parse_double("vehicle.qy0", v);
         }});
    add({"vehicle.v0", true,
         [](const SimConfig& c) { return fmt_double(c.initial.v); },
         [](SimConfig& c, const std::string& v) {
           c.initial.v = parse_double("vehicle.v0", v);
         }});

    add(num_field("sim.t_max", &SimConfig::t_max));
    add(num_field("sim.dt", &SimConfig::dt));
    add(long_field("sim.frame_length", &SimConfig::frame_length));
    add(num_field("sim.sample_interval", &SimConfig::sample_interval));
    add(num_field("sim.total_power", &SimConfig::total_power));
    add({"sim.n_theta", true,
         [](const SimConfig& c) { return std::to_string(c.n_theta); },
         [](SimConfig& c, const std::string& v) {
           c.n_theta = static_cast<int>(checked_long("sim.n_theta", parse_double("sim.n_theta", v)));
         }});

    add(num_field("noise.sigma_z2", &SimConfig::sigma_z2));
    add(num_field("noise.sigma_qx", &SimConfig::sigma_qx));
    add(num_field("noise.sigma_qy", &SimConfig::sigma_qy));
    add(num_field("noise.sigma_v", &SimConfig::sigma_v));
    add(num_field("noise.sigma_tau", &SimConfig::sigma_tau));
    add(num_field("noise.sigma_mu", &SimConfig::sigma_mu));
    add(num_field("noise.sigma_costheta", &SimConfig::sigma_costheta));

    add(num_field("tpm.xi", &SimConfig::tpm_xi));
    add(num_field("tpm.c_pi", &SimConfig::tpm_c_pi));
    add(num_field("tpm.sigma_ckm", &SimConfig::tpm_sigma_ckm));
    add(num_field("tpm.jump_deg", &SimConfig::tpm_jump_deg));

    add(num_field("blockage.p_blk", &SimConfig::p_blk));
    add(long_field("blockage.window_start", &SimConfig::window_start));
    add(long_field("blockage.window_end", &SimConfig::window_end));

    add(long_field("ckm.samples", &SimConfig::ckm_samples));
    add({"ckm.k", true,
         [](const SimConfig& c) { return std::to_string(c.ckm_k); },
         [](SimConfig& c, const std::string& v) {
           c.ckm_k = static_cast<int>(checked_long("ckm.k", parse_double("ckm.k", v)));
         }});
    add(num_field("ckm.idw_power", &SimConfig::ckm_idw_power));
    add(long_field("ckm.rows", &SimConfig::ckm_rows));
    add(num_field("ckm.x_margin", &SimConfig::ckm_x_margin));
    add(num_field("ckm.y_halfwidth", &SimConfig::ckm_y_halfwidth));
    add(num_field("ckm.step_qx", &SimConfig::ckm_step_qx));
    add(num_field("ckm.step_qy", &SimConfig::ckm_step_qy));
    add(num_field("ckm.step_v", &SimConfig::ckm_step_v));

    add(long_field("mf.window_delay", &SimConfig::mf_window_delay));
    add(long_field("mf.window_doppler", &SimConfig::mf_window_doppler));
    add(long_field("mf.max_delay_index", &SimConfig::mf_max_delay_index));
    add(long_field("mf.max_doppler_index", &SimConfig::mf_max_doppler_index));
    add(num_field("mf.conf_factor", &SimConfig::mf_conf_factor));

    add(long_field("mc.runs", &SimConfig::mc_runs));
    add({"mc.seed", true,
         [](const SimConfig& c) { return std::to_string(c.seed); },
         [](SimConfig& c, const std::string& v) {
           const double x = parse_double("mc.seed", v);
           if (x < 0) throw std::invalid_argument("config: mc.seed must be >= 0");
           c.seed = static_cast<std::uint64_t>(checked_long("mc.seed", x));
         }});

    add(num_field("init.std", &SimConfig::init_std));

    add({"bf.mode", false,
         [](const SimConfig& c) {
           switch (c.bf_mode) {
             case beamform::BfMode::kNone: return std::string("none");
             case beamform::BfMode::kEqual: return std::string("equal");
             default: return std::string("optimized");
           }
         },
         [](SimConfig& c, const std::string& v) {
           if (v == "none") c.bf_mode = beamform::BfMode::kNone;
           else if (v == "equal") c.bf_mode = beamform::BfMode::kEqual;
           else if (v == "optimized") c.bf_mode = beamform::BfMode::kOptimized;
           else throw std::invalid_argument("config: bf.mode must be none|equal|optimized");
         }});
    add({"bf.gain_source", false,
         [](const SimConfig& c) {
           return c.bf_gain_source == GainSource::kCkm ? std::string("ckm")
                                                       : std::string("estimated");
         },
         [](SimConfig& c, const std::string& v) {
           if (v == "ckm") c.bf_gain_source = GainSource::kCkm;
           else if (v == "estimated") c.bf_gain_source = GainSource::kEstimated;
           else throw std::invalid_argument("config: bf.gain_source must be ckm|estimated");
         }});
    add({"scheme", false,
         [](const SimConfig& c) {
           switch (c.scheme) {
             case Scheme::kProposed: return std::string("proposed");
             case Scheme::kBaseline: return std::string("baseline");
             default: return std::string("both");
           }
         },
         [](SimConfig& c, const std::string& v) {
           if (v == "proposed") c.scheme = Scheme::kProposed;
           else if (v == "baseline") c.scheme = Scheme::kBaseline;
           else if (v == "both") c.scheme = Scheme::kBoth;
           else throw std::invalid_argument("config: scheme must be proposed|baseline|both");
         }});
    return t;
  }();
  return table;
}

const Field& find_field(const std::string& key) {
  for (const Field& f : field_table()) {
    if (f.key == key) return f;
  }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

}  // namespace

void SimConfig::validate() const {
  scene.validate();
  if (!(t_max > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("config: sim.t_max and sim.dt must be positive");
  }
  if (frame_length < 1) {
    throw std::invalid_argument("config: sim.frame_length must be >= 1");
  }
  if (!(sample_interval > 0.0)) {
    throw std::invalid_argument("config: sim.sample_interval must be positive");
  }
  if (!(total_power > 0.0)) {
    throw std::invalid_argument("config: sim.total_power must be positive");
  }
  if (n_theta < 2) {
    throw std::invalid_argument("config: sim.n_theta must be >= 2");
  }
  if (sigma_z2 < 0.0) {
    throw std::invalid_argument("config: noise.sigma_z2 must be >= 0");
  }
  if (p_blk < 0.0 || p_blk > 1.0) {
    throw std::invalid_argument("config: blockage.p_blk must be in [0, 1]");
  }
  if (tpm_c_pi < 0.0 || tpm_c_pi > 1.0) {
    throw std::invalid_argument("config: tpm.c_pi must be in [0, 1]");
  }
  if (tpm_xi < 0.0 || tpm_xi > 1.0) {
    throw std::invalid_argument("config: tpm.xi must be in [0, 1]");
  }
  if (mc_runs < 1) {
    throw std::invalid_argument("config: mc.runs must be >= 1");
  }
  if (ckm_rows < 1 || ckm_samples < ckm_rows) {
    throw std::invalid_argument("config: ckm.samples must be >= ckm.rows >= 1");
  }
  if (ckm_k < 1) {
    throw std::invalid_argument("config: ckm.k must be >= 1");
  }
}

void SimConfig::apply(const std::string& key, const std::string& value) {
  find_field(key).set(*this, value);
}

void SimConfig::set_numeric(const std::string& key, double value) {
  const Field& f = find_field(key);
  if (!f.numeric) {
    throw std::invalid_argument("config: key '" + key + "' is not numeric");
  }
  f.set(*this, fmt_double(value));
}

std::vector<std::pair<std::string, std::string>> SimConfig::to_key_values()
    const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(field_table().size());
  for (const Field& f : field_table()) {
    out.emplace_back(f.key, f.get(*this));
  }
  return out;
}

SimConfig SimConfig::from_text(const std::string& text) {
  SimConfig cfg;
  std::stringstream ss(text);
  std::string line;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not of the form key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    cfg.apply(key, value);
  }
  cfg.validate();
  return cfg;
}

SimConfig SimConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace ckmtrack::harness
