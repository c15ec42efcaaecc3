#include "bipedest/config_file.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bipedest/dataset_io.hpp"

namespace bipedest {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(std::string_view v) {
  const double d = parse_double(v);
  if (d != static_cast<double>(static_cast<int>(d))) {
    throw std::invalid_argument("expected an integer, got '" + std::string(v) + "'");
  }
  return static_cast<int>(d);
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + std::string(v) + "'");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

void add_noise_keys(std::map<std::string, Setter>& m, const std::string& prefix,
                    std::function<std::vector<NoiseConfig*>(ExperimentConfig&)> targets) {
  auto field = [&](const char* name, double NoiseConfig::*member) {
    m[prefix + name] = [targets, member](ExperimentConfig& c, std::string_view v) {
      const double x = parse_double(v);
      for (NoiseConfig* n : targets(c)) {
        n->*member = x;
      }
    };
  };
  field("w_f", &NoiseConfig::w_f);
  field("w_w", &NoiseConfig::w_w);
  field("w_bf", &NoiseConfig::w_bf);
  field("w_bw", &NoiseConfig::w_bw);
  field("w_p", &NoiseConfig::w_p);
  field("w_z", &NoiseConfig::w_z);
  field("n_p", &NoiseConfig::n_p);
  field("n_z", &NoiseConfig::n_z);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    m["dataset"] = [](ExperimentConfig& c, std::string_view v) { c.dataset = std::string(v); };
    m["output_dir"] = [](ExperimentConfig& c, std::string_view v) {
      c.output_dir = std::string(v);
    };
    m["seed"] = [](ExperimentConfig& c, std::string_view v) {
      c.seed = std::stoull(std::string(v));
    };

    auto gd = [&m](const char* name, double GaitConfig::*member) {
      m[std::string("gait.") + name] = [member](ExperimentConfig& c, std::string_view v) {
        c.gait.*member = parse_double(v);
      };
    };
    gd("step_length", &GaitConfig::step_length);
    gd("step_duration", &GaitConfig::step_duration);
    gd("double_support_fraction", &GaitConfig::double_support_fraction);
    gd("body_height", &GaitConfig::body_height);
    gd("lateral_sway_amplitude", &GaitConfig::lateral_sway_amplitude);
    gd("dt", &GaitConfig::dt);
    gd("stand_time", &GaitConfig::stand_time);
    gd("foot_spacing", &GaitConfig::foot_spacing);
    gd("swing_height", &GaitConfig::swing_height);
    gd("bob_amplitude", &GaitConfig::bob_amplitude);
    gd("surge_amplitude", &GaitConfig::surge_amplitude);
    gd("roll_amplitude", &GaitConfig::roll_amplitude);
    gd("pitch_amplitude", &GaitConfig::pitch_amplitude);
    gd("yaw_amplitude", &GaitConfig::yaw_amplitude);
    gd("slip_rate", &GaitConfig::slip_rate);
    m["gait.n_steps"] = [](ExperimentConfig& c, std::string_view v) {
      c.gait.n_steps = parse_int(v);
    };

    add_noise_keys(m, "sim.noise.", [](ExperimentConfig& c) {
      return std::vector<NoiseConfig*>{&c.sim_noise};
    });
    add_noise_keys(m, "filter.noise.", [](ExperimentConfig& c) {
      return std::vector<NoiseConfig*>{&c.run.filter.noise};
    });
    add_noise_keys(m, "noise.", [](ExperimentConfig& c) {
      return std::vector<NoiseConfig*>{&c.sim_noise, &c.run.filter.noise};
    });

    m["filter.model"] = [](ExperimentConfig& c, std::string_view v) {
      c.run.filter.model = parse_foot_model(v);
    };
    m["filter.inflation"] = [](ExperimentConfig& c, std::string_view v) {
      c.run.filter.inflation = parse_double(v);
    };
    m["filter.measurement_noise"] = [](ExperimentConfig& c, std::string_view v) {
      if (v == "discrete") {
        c.run.filter.meas_noise_mode = MeasurementNoiseMode::Discrete;
      } else if (v == "continuous") {
        c.run.filter.meas_noise_mode = MeasurementNoiseMode::Continuous;
      } else {
        throw std::invalid_argument("expected discrete|continuous");
      }
    };
    m["filter.discretization"] = [](ExperimentConfig& c, std::string_view v) {
      if (v == "first_order") {
        c.run.filter.discretization = Discretization::FirstOrder;
      } else if (v == "van_loan") {
        c.run.filter.discretization = Discretization::VanLoan;
      } else {
        throw std::invalid_argument("expected first_order|van_loan");
      }
    };
    m["filter.touchdown"] = [](ExperimentConfig& c, std::string_view v) {
      if (v == "correlated") {
        c.run.filter.touchdown = TouchdownCovariance::Correlated;
      } else if (v == "decoupled") {
        c.run.filter.touchdown = TouchdownCovariance::Decoupled;
      } else {
        throw std::invalid_argument("expected correlated|decoupled");
      }
    };
    m["filter.gate_probability"] = [](ExperimentConfig& c, std::string_view v) {
      const double p = parse_double(v);
      if (p <= 0.0) {
        c.run.filter.update.gate_probability.reset();
      } else {
        c.run.filter.update.gate_probability = p;
      }
    };
    m["filter.max_condition"] = [](ExperimentConfig& c, std::string_view v) {
      c.run.filter.update.max_condition = parse_double(v);
    };
    m["filter.init_window"] = [](ExperimentConfig& c, std::string_view v) {
      c.run.init_window = parse_double(v);
    };
    m["filter.truth_init"] = [](ExperimentConfig& c, std::string_view v) {
      c.run.truth_init = parse_bool(v);
    };
    m["filter.drop_updates"] = [](ExperimentConfig& c, std::string_view v) {
      c.run.drop_updates = parse_bool(v);
    };
    m["filter.check_health"] = [](ExperimentConfig& c, std::string_view v) {
      c.run.check_health = parse_bool(v);
    };
    auto init = [&m](const char* name, double InitialUncertainty::*member) {
      m[std::string("init.sigma_") + name] = [member](ExperimentConfig& c, std::string_view v) {
        c.run.init.*member = parse_double(v);
      };
    };
    init("r", &InitialUncertainty::r);
    init("v", &InitialUncertainty::v);
    init("phi", &InitialUncertainty::phi);
    init("b_f", &InitialUncertainty::b_f);
    init("b_w", &InitialUncertainty::b_w);
    return m;
  }();
  return table;
}

}  // namespace

void apply_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(std::string(key));
  if (it == table.end()) {
    throw std::invalid_argument("unknown key '" + std::string(key) + "'");
  }
  it->second(cfg, value);
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string config_keys_help() {
  std::ostringstream os;
  os << "Recognized configuration keys (key = value):\n";
  for (const auto& [key, setter] : setters()) {
    os << "  " << key << "\n";
  }
  os << "noise.* sets both sim.noise.* and filter.noise.*\n";
  return os.str();
}

}  // namespace bipedest
