#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace cmsm::app {

namespace {

std::string_view trim(std::string_view s) {
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view text) {
  T value{};
  auto const *end = text.data() + text.size();
  auto const [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError("expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

std::string format(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

template <class T>
std::string format(T v)
  requires std::is_integral_v<T>
{
  return std::to_string(v);
}

std::string format(std::filesystem::path const &p) { return p.string(); }

std::string format(std::vector<double> const &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format(v[i]);
  return s;
}

template <class T>
T parse_value(std::string_view text) {
  if constexpr (std::is_same_v<T, std::filesystem::path>) {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
    if (text.empty()) throw ConfigError("empty path");
    return std::filesystem::path(std::string(text));
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    std::vector<double> out;
    while (!text.empty()) {
      auto const comma = text.find(',');
      out.push_back(parse_number<double>(trim(text.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      text = text.substr(comma + 1);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
  } else {
    return parse_number<T>(text);
  }
}

template <class Access>
ConfigKey key(std::string name, std::string help, Access access) {
  using T = std::remove_cvref_t<decltype(access(std::declval<RunConfig &>()))>;
  return ConfigKey{
      std::move(name), std::move(help),
      [access](RunConfig &c, std::string_view v) { access(c) = parse_value<T>(v); },
      [access](RunConfig const &c) { return format(access(c)); },
  };
}

std::vector<ConfigKey> build_keys() {
  return {
      key("sim.height", "image height in pixels (power of two)", [](auto &c) -> auto & { return c.sim.spec.phantom.height; }),
      key("sim.width", "image width in pixels (power of two)", [](auto &c) -> auto & { return c.sim.spec.phantom.width; }),
      key("sim.coils", "number of receive coils", [](auto &c) -> auto & { return c.sim.spec.n_coils; }),
      key("sim.ellipses", "random ellipses per phantom", [](auto &c) -> auto & { return c.sim.spec.phantom.n_ellipses; }),
      key("sim.intensity_min", "lowest ellipse intensity", [](auto &c) -> auto & { return c.sim.spec.phantom.intensity_min; }),
      key("sim.intensity_max", "highest ellipse intensity", [](auto &c) -> auto & { return c.sim.spec.phantom.intensity_max; }),
      key("sim.phase_scale", "phase field correlation length in pixels, 0 for real images",
          [](auto &c) -> auto & { return c.sim.spec.phantom.phase_scale; }),
      key("sim.lobe_width", "coil sensitivity lobe width relative to the field of view",
          [](auto &c) -> auto & { return c.sim.spec.lobe_width; }),
      key("sim.eta", "k-space noise standard deviation", [](auto &c) -> auto & { return c.sim.spec.eta; }),
      key("sim.acceleration", "acceleration of the stored training masks", [](auto &c) -> auto & { return c.sim.spec.acceleration; }),
      key("sim.acs_width", "fully sampled centre columns", [](auto &c) -> auto & { return c.sim.spec.acs_width; }),
      key("sim.train_records", "records in train.cmsd", [](auto &c) -> auto & { return c.sim.train_records; }),
      key("sim.test_records", "records in test.cmsd", [](auto &c) -> auto & { return c.sim.test_records; }),
      key("sim.seed", "dataset seed (--seed overrides for simulate)", [](auto &c) -> auto & { return c.sim.seed; }),

      key("train.lambda", "weight of the coil map smoothness loss", [](auto &c) -> auto & { return c.train.lambda; }),
      key("train.learning_rate", "Adam learning rate", [](auto &c) -> auto & { return c.train.learning_rate; }),
      key("train.iterations", "total optimisation steps", [](auto &c) -> auto & { return c.train.iterations; }),
      key("train.batch_size", "records per step", [](auto &c) -> auto & { return c.train.batch_size; }),
      key("train.sigma_min", "smallest noise level", [](auto &c) -> auto & { return c.train.schedule.sigma_min; }),
      key("train.sigma_max", "largest noise level", [](auto &c) -> auto & { return c.train.schedule.sigma_max; }),
      key("train.seed", "training seed (--seed overrides for train)", [](auto &c) -> auto & { return c.train.seed; }),
      key("train.log_every", "iterations between log rows", [](auto &c) -> auto & { return c.train.log_every; }),
      key("train.checkpoint_every", "iterations between checkpoints", [](auto &c) -> auto & { return c.train.checkpoint_every; }),
      key("train.width", "hidden channels of both networks", [](auto &c) -> auto & { return c.model_width; }),

      key("sample.ensemble", "subsampling operators per step", [](auto &c) -> auto & { return c.sample.ensemble; }),
      key("sample.step_size", "data consistency step", [](auto &c) -> auto & { return c.sample.step_size; }),
      key("sample.steps", "reverse diffusion steps", [](auto &c) -> auto & { return c.sample.steps; }),
      key("sample.mask_acceleration", "acceleration of the ensemble masks",
          [](auto &c) -> auto & { return c.sample.mask_acceleration; }),
      key("sample.seed", "sampler seed, record i uses seed + i (--seed overrides for reconstruct)",
          [](auto &c) -> auto & { return c.sample.seed; }),
      key("sample.threads", "worker threads across records, capped by CMSM_THREADS",
          [](auto &c) -> auto & { return c.sample.threads; }),
      key("sample.csm_refresh_every", "re-estimate maps every K steps, 0 never",
          [](auto &c) -> auto & { return c.sample.csm_refresh_every; }),

      key("eval.accelerations", "comma separated test accelerations", [](auto &c) -> auto & { return c.eval.accelerations; }),
      key("eval.tv_lambda", "TV regularisation weight", [](auto &c) -> auto & { return c.eval.tv.lambda; }),
      key("eval.tv_iterations", "TV outer iterations", [](auto &c) -> auto & { return c.eval.tv.iterations; }),
      key("eval.tv_inner", "Chambolle iterations per TV step", [](auto &c) -> auto & { return c.eval.tv.inner_iterations; }),
      key("eval.seed", "test mask seed, record i uses seed + i", [](auto &c) -> auto & { return c.eval.seed; }),

      key("paths.data_dir", "directory holding train.cmsd and test.cmsd (--out for simulate)",
          [](auto &c) -> auto & { return c.paths.data_dir; }),
      key("paths.checkpoint", "model checkpoint (--out for train)", [](auto &c) -> auto & { return c.paths.checkpoint; }),
      key("paths.train_log", "training loss CSV", [](auto &c) -> auto & { return c.paths.train_log; }),
      key("paths.recon_dir", "reconstruction images and metrics.csv (--out for reconstruct)",
          [](auto &c) -> auto & { return c.paths.recon_dir; }),
      key("paths.metrics", "metrics CSV read by evaluate when no files are given",
          [](auto &c) -> auto & { return c.paths.metrics; }),
      key("paths.summary", "aggregate CSV written by evaluate (--out for evaluate)",
          [](auto &c) -> auto & { return c.paths.summary; }),
  };
}

}  // namespace

void RunConfig::validate() const {
  try {
    cmsm::validate(sim.spec.phantom);
    if (sim.spec.n_coils < 1) throw std::invalid_argument("sim.coils must be >= 1");
    if (!(sim.spec.eta >= 0)) throw std::invalid_argument("sim.eta must be >= 0");
    if (!(sim.spec.acceleration >= 1)) throw std::invalid_argument("sim.acceleration must be >= 1");
    if (sim.spec.acs_width < 0 || sim.spec.acs_width > sim.spec.phantom.width) {
      throw std::invalid_argument("sim.acs_width must lie in [0, width]");
    }
    if (sim.train_records < 0 || sim.test_records < 0) throw std::invalid_argument("record counts must be >= 0");
    train.validate();
    if (model_width < 1) throw std::invalid_argument("train.width must be >= 1");
    sample.validate();
    for (double r : eval.accelerations) {
      if (!(r >= 1)) throw std::invalid_argument("eval.accelerations must all be >= 1");
    }
    if (!(eval.tv.lambda >= 0) || eval.tv.iterations < 1 || eval.tv.inner_iterations < 1) {
      throw std::invalid_argument("eval.tv_* out of range");
    }
  } catch (std::invalid_argument const &e) {
    throw ConfigError(e.what());
  }
}

std::vector<ConfigKey> const &config_keys() {
  static std::vector<ConfigKey> const keys = build_keys();
  return keys;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    auto const nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto const hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto const where = "line " + std::to_string(line_no) + ": ";
    auto const eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    auto const name = trim(line.substr(0, eq));
    auto const value = trim(line.substr(eq + 1));
    auto const &keys = config_keys();
    auto const it = std::find_if(keys.begin(), keys.end(), [&](ConfigKey const &k) { return k.name == name; });
    if (it == keys.end()) throw ConfigError(where + "unknown key '" + std::string(name) + "'");
    if (!seen.insert(std::string(name)).second) throw ConfigError(where + "repeated key '" + std::string(name) + "'");
    try {
      it->set(base, value);
    } catch (ConfigError const &e) {
      throw ConfigError(where + std::string(name) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(std::filesystem::path const &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (ConfigError const &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string describe_keys() {
  RunConfig const defaults;
  std::size_t width = 0;
  for (auto const &k : config_keys()) width = std::max(width, k.name.size() + k.get(defaults).size() + 3);
  std::ostringstream os;
  os << "Config keys (key = value, # starts a comment):\n";
  for (auto const &k : config_keys()) {
    std::string const lhs = k.name + " = " + k.get(defaults);
    os << "  " << lhs << std::string(width - lhs.size() + 2, ' ') << k.help << '\n';
  }
  return os.str();
}

}  // namespace cmsm::app
