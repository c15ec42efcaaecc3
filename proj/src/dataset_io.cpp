#include "bipedest/dataset_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bipedest {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

void append_double(std::string& out, double x) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  out.append(buf.data(), res.ptr);
}

template <typename V>
void append_vec(std::string& out, const V& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(',');
    append_double(out, v[i]);
  }
}

Eigen::Vector3d vec3(const std::vector<double>& row, std::size_t at) {
  return {row[at], row[at + 1], row[at + 2]};
}

Quaternion quat(const std::vector<double>& row, std::size_t at) {
  return Quaternion::from_unit_coeffs({row[at], row[at + 1], row[at + 2], row[at + 3]});
}

constexpr std::size_t kBaseColumns = 35;
constexpr std::size_t kFootColumns = 15;

}  // namespace

std::string format_double(double x) {
  std::string s;
  append_double(s, x);
  return s;
}

double parse_double(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return x;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

std::string file_hash(const std::filesystem::path& path) { return fnv1a_hex(read_file(path)); }

json to_json(const NoiseConfig& n) {
  return {{"w_f", n.w_f},   {"w_w", n.w_w}, {"w_bf", n.w_bf}, {"w_bw", n.w_bw},
          {"w_p", n.w_p},   {"w_z", n.w_z}, {"n_p", n.n_p},   {"n_z", n.n_z},
          {"gravity", {n.gravity.x(), n.gravity.y(), n.gravity.z()}}};
}

NoiseConfig noise_from_json(const json& j) {
  NoiseConfig n;
  n.w_f = j.at("w_f").get<double>();
  n.w_w = j.at("w_w").get<double>();
  n.w_bf = j.at("w_bf").get<double>();
  n.w_bw = j.at("w_bw").get<double>();
  n.w_p = j.at("w_p").get<double>();
  n.w_z = j.at("w_z").get<double>();
  n.n_p = j.at("n_p").get<double>();
  n.n_z = j.at("n_z").get<double>();
  const auto g = j.at("gravity").get<std::vector<double>>();
  if (g.size() != 3) {
    throw std::runtime_error("gravity must have 3 components");
  }
  n.gravity = {g[0], g[1], g[2]};
  return n;
}

json to_json(const GaitConfig& g) {
  return {{"step_length", g.step_length},
          {"step_duration", g.step_duration},
          {"double_support_fraction", g.double_support_fraction},
          {"body_height", g.body_height},
          {"lateral_sway_amplitude", g.lateral_sway_amplitude},
          {"n_steps", g.n_steps},
          {"dt", g.dt},
          {"stand_time", g.stand_time},
          {"foot_spacing", g.foot_spacing},
          {"swing_height", g.swing_height},
          {"bob_amplitude", g.bob_amplitude},
          {"surge_amplitude", g.surge_amplitude},
          {"roll_amplitude", g.roll_amplitude},
          {"pitch_amplitude", g.pitch_amplitude},
          {"yaw_amplitude", g.yaw_amplitude},
          {"slip_rate", g.slip_rate}};
}

GaitConfig gait_from_json(const json& j) {
  GaitConfig g;
  g.step_length = j.at("step_length").get<double>();
  g.step_duration = j.at("step_duration").get<double>();
  g.double_support_fraction = j.at("double_support_fraction").get<double>();
  g.body_height = j.at("body_height").get<double>();
  g.lateral_sway_amplitude = j.at("lateral_sway_amplitude").get<double>();
  g.n_steps = j.at("n_steps").get<int>();
  g.dt = j.at("dt").get<double>();
  g.stand_time = j.at("stand_time").get<double>();
  g.foot_spacing = j.at("foot_spacing").get<double>();
  g.swing_height = j.at("swing_height").get<double>();
  g.bob_amplitude = j.at("bob_amplitude").get<double>();
  g.surge_amplitude = j.at("surge_amplitude").get<double>();
  g.roll_amplitude = j.at("roll_amplitude").get<double>();
  g.pitch_amplitude = j.at("pitch_amplitude").get<double>();
  g.yaw_amplitude = j.at("yaw_amplitude").get<double>();
  g.slip_rate = j.at("slip_rate").get<double>();
  return g;
}

std::vector<std::string> dataset_columns(int n_feet) {
  std::vector<std::string> c{"t"};
  auto add3 = [&c](const std::string& p) {
    for (const char* s : {"_x", "_y", "_z"}) {
      c.push_back(p + s);
    }
  };
  auto add4 = [&c](const std::string& p) {
    for (const char* s : {"_x", "_y", "_z", "_w"}) {
      c.push_back(p + s);
    }
  };
  add3("r");
  add3("v");
  add3("a");
  add4("q");
  add3("w");
  add3("imu_true_f");
  add3("imu_true_w");
  add3("bias_f");
  add3("bias_w");
  add3("imu_f");
  add3("imu_w");
  for (int i = 0; i < n_feet; ++i) {
    const std::string f = "foot" + std::to_string(i);
    add3(f + "_p");
    add4(f + "_z");
    c.push_back(f + "_contact");
    add3(f + "_sp");
    add4(f + "_sz");
  }
  return c;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  return p.replace_extension(".json");
}

std::string write_dataset(const Dataset& d, const std::filesystem::path& csv) {
  const std::vector<std::string> cols = dataset_columns(d.n_feet);
  const SensorStream& s = d.sensors;
  if (s.imu.size() != d.size() || s.kin.size() != d.size()) {
    throw std::invalid_argument("write_dataset: truth and sensor streams differ in length");
  }

  std::string out;
  out.reserve(d.size() * (cols.size() * 22 + 1) + 1024);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) {
      out.push_back(',');
    }
    out += cols[i];
  }
  out.push_back('\n');

  for (std::size_t k = 0; k < d.size(); ++k) {
    const TruthSample& ts = d.truth[k];
    append_double(out, ts.t);
    append_vec(out, ts.r);
    append_vec(out, ts.v);
    append_vec(out, ts.a);
    append_vec(out, ts.q.coeffs());
    append_vec(out, ts.w);
    append_vec(out, ts.imu.f);
    append_vec(out, ts.imu.w);
    append_vec(out, s.b_f[k]);
    append_vec(out, s.b_w[k]);
    append_vec(out, s.imu[k].f);
    append_vec(out, s.imu[k].w);
    for (int i = 0; i < d.n_feet; ++i) {
      const FootState& f = ts.feet[i];
      const KinMeasurement& m = s.kin[k][i];
      append_vec(out, f.p);
      append_vec(out, f.z.coeffs());
      out += f.in_contact ? ",1" : ",0";
      append_vec(out, m.s_p);
      append_vec(out, m.s_z.coeffs());
    }
    out.push_back('\n');
  }
  write_file(csv, out);
  const std::string hash = fnv1a_hex(out);

  json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["kind"] = "dataset";
  meta["generator"] = d.generator;
  meta["dt"] = d.dt;
  meta["n_feet"] = d.n_feet;
  meta["rows"] = d.size();
  meta["seed"] = s.seed;
  meta["noise"] = to_json(d.noise);
  meta["gait"] = d.gait ? to_json(*d.gait) : json(nullptr);
  meta["columns"] = cols;
  meta["csv_fnv1a"] = hash;
  meta["units"] = {{"t", "s"},
                   {"r", "m"},
                   {"v", "m/s"},
                   {"a", "m/s^2"},
                   {"w", "rad/s"},
                   {"imu_f", "m/s^2"},
                   {"imu_w", "rad/s"},
                   {"p", "m"},
                   {"sp", "m"}};
  meta["conventions"] = {
      {"world", "z up, gravity along -z"},
      {"quaternion", "x,y,z,w; q maps world vectors into the base frame; z maps world into foot"},
      {"sp", "foot position relative to the base, base frame"},
      {"sz", "base to foot rotation, q * z^-1"},
      {"imu_true", "noise-free sample held over [t, t + dt)"}};
  write_file(sidecar_path(csv), meta.dump(2) + "\n");
  return hash;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  throw std::out_of_range("missing CSV column '" + std::string(name) + "'");
}

namespace {

CsvTable parse_csv(std::string_view text, const std::string& name) {
  CsvTable t;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header.assign(fields.begin(), fields.end());
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw std::runtime_error(name + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(t.header.size()) + " fields");
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      try {
        row[i] = parse_double(fields[i]);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error(name + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) {
    throw std::runtime_error(name + ": empty CSV");
  }
  return t;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path), path.string());
}

Dataset read_dataset(const std::filesystem::path& csv) {
  const json meta = json::parse(read_file(sidecar_path(csv)));
  if (meta.at("format_version").get<int>() != kDatasetFormatVersion ||
      meta.at("kind").get<std::string>() != "dataset") {
    throw std::runtime_error(csv.string() + ": unsupported dataset format");
  }
  const std::string text = read_file(csv);
  if (fnv1a_hex(text) != meta.at("csv_fnv1a").get<std::string>()) {
    throw std::runtime_error(csv.string() + ": content hash does not match its sidecar");
  }

  Dataset d;
  d.generator = meta.at("generator").get<std::string>();
  d.dt = meta.at("dt").get<double>();
  d.n_feet = meta.at("n_feet").get<int>();
  d.noise = noise_from_json(meta.at("noise"));
  if (!meta.at("gait").is_null()) {
    d.gait = gait_from_json(meta.at("gait"));
  }
  d.sensors.seed = meta.at("seed").get<std::uint64_t>();

  const CsvTable table = parse_csv(text, csv.string());
  if (table.header != dataset_columns(d.n_feet)) {
    throw std::runtime_error(csv.string() + ": column schema does not match");
  }
  if (table.rows.size() != meta.at("rows").get<std::size_t>()) {
    throw std::runtime_error(csv.string() + ": row count does not match its sidecar");
  }

  SensorStream& s = d.sensors;
  d.truth.reserve(table.rows.size());
  std::vector<bool> previous;
  for (const std::vector<double>& row : table.rows) {
    TruthSample ts;
    ts.t = row[0];
    ts.r = vec3(row, 1);
    ts.v = vec3(row, 4);
    ts.a = vec3(row, 7);
    ts.q = quat(row, 10);
    ts.w = vec3(row, 14);
    ts.imu = {ts.t, vec3(row, 17), vec3(row, 20)};
    s.b_f.push_back(vec3(row, 23));
    s.b_w.push_back(vec3(row, 26));
    s.imu.push_back({ts.t, vec3(row, 29), vec3(row, 32)});
    std::vector<KinMeasurement> kin;
    for (int i = 0; i < d.n_feet; ++i) {
      const std::size_t at = kBaseColumns + kFootColumns * static_cast<std::size_t>(i);
      FootState f;
      f.p = vec3(row, at);
      f.z = quat(row, at + 3);
      f.in_contact = row[at + 7] != 0.0;
      ts.feet.push_back(f);
      kin.push_back({ts.t, i, vec3(row, at + 8), quat(row, at + 11)});
    }
    s.kin.push_back(std::move(kin));

    const std::vector<bool> current = ts.contacts();
    if (!previous.empty()) {
      for (const ContactEvent& e : detect_contact_events(previous, current, ts.t)) {
        s.events.push_back(e);
      }
    }
    previous = current;
    d.truth.push_back(std::move(ts));
  }
  return d;
}

}  // namespace bipedest
