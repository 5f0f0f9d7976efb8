#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "cmsm/baselines.hpp"
#include "cmsm/checkpoint.hpp"
#include "cmsm/dataset_io.hpp"
#include "cmsm/errors.hpp"
#include "cmsm/parallel.hpp"
#include "cmsm/rng.hpp"
#include "cmsm/sampling.hpp"
#include "pgm.hpp"

namespace cmsm::app {

namespace fs = std::filesystem;

namespace {

void require_file(fs::path const &path, char const *what) {
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path.string());
}

void prepare_parent(fs::path const &path) {
  auto const parent = path.parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  if (ec || (!parent.empty() && !fs::is_directory(parent))) {
    throw ConfigError("cannot create directory " + parent.string());
  }
}

std::string read_text(fs::path const &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_r(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

std::string log_header() { return "iteration,msm,csm,total,sigma\n"; }

std::string log_line(TrainLogRow const &row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g\n", static_cast<long long>(row.iteration), row.msm, row.csm,
                row.total, row.sigma);
  return buf;
}

/// Rows of an earlier log that precede `before`, so a resumed run continues it.
std::vector<std::string> earlier_log_lines(fs::path const &path, std::int64_t before) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return lines;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      if (std::stoll(line.substr(0, line.find(','))) < before) lines.push_back(line + "\n");
    } catch (std::exception const &) {
      throw DataError("malformed training log " + path.string());
    }
  }
  return lines;
}

int method_rank(std::string const &m) {
  if (m == kInputMethod) return 0;
  if (m == kTvMethod) return 1;
  if (m == kCmsmMethod) return 2;
  return 3;
}

}  // namespace

RunConfig apply_overrides(RunConfig config, Command command, Overrides const &overrides) {
  switch (command) {
  case Command::simulate:
    if (overrides.seed) config.sim.seed = *overrides.seed;
    if (overrides.out) config.paths.data_dir = *overrides.out;
    break;
  case Command::train:
    if (overrides.seed) config.train.seed = *overrides.seed;
    if (overrides.out) config.paths.checkpoint = *overrides.out;
    break;
  case Command::reconstruct:
    if (overrides.seed) config.sample.seed = *overrides.seed;
    if (overrides.out) {
      config.paths.recon_dir = *overrides.out;
      config.paths.metrics = *overrides.out / "metrics.csv";
    }
    break;
  case Command::evaluate:
    if (overrides.out) config.paths.summary = *overrides.out;
    break;
  }
  return config;
}

int thread_cap(int requested) {
  int const cap = std::getenv("CMSM_THREADS") ? default_thread_count() : requested;
  return std::max(1, std::min(requested, cap));
}

Model<float> initial_model(RunConfig const &config) {
  ModelSpec spec = ModelSpec::defaults(config.sim.spec.n_coils, config.model_width);
  spec.schedule = config.train.schedule;
  spec.schedule.steps = config.sample.steps;
  return Model<float>(spec, derive_seed(config.train.seed, {0x6d6f64656cULL}));
}

void cmd_simulate(RunConfig const &config, std::ostream &out) {
  config.validate();
  if (config.sim.train_records < 1 || config.sim.test_records < 1) {
    throw ConfigError("simulate: sim.train_records and sim.test_records must be >= 1");
  }
  prepare_parent(config.paths.train_set());

  auto const &spec = config.sim.spec;
  auto make = [&](int n, std::uint64_t stream) {
    std::vector<DatasetRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    std::uint64_t const seed = derive_seed(config.sim.seed, {stream});
    for (int i = 0; i < n; ++i) records.push_back(simulate_record(spec, seed, static_cast<std::uint64_t>(i)));
    return records;
  };
  auto const train = make(config.sim.train_records, 0);
  auto const test = make(config.sim.test_records, 1);
  save_dataset(train, config.paths.train_set());
  save_dataset(test, config.paths.test_set());

  for (auto const &[path, n] : {std::pair{config.paths.train_set(), train.size()}, std::pair{config.paths.test_set(), test.size()}}) {
    out << path.string() << ": " << n << " records, " << spec.phantom.height << "x" << spec.phantom.width << ", "
        << spec.n_coils << " coils, R=" << spec.acceleration << ", acs=" << spec.acs_width << ", eta=" << spec.eta << '\n';
  }
}

void cmd_train(RunConfig const &config, std::optional<fs::path> const &resume, std::ostream &out) {
  config.validate();
  require_file(config.paths.train_set(), "training set");
  if (resume) require_file(*resume, "checkpoint to resume");
  prepare_parent(config.paths.checkpoint);
  prepare_parent(config.paths.train_log);

  auto const records = load_dataset(config.paths.train_set());
  if (records.empty()) throw DataError("training set is empty");
  auto const views = training_views(records);

  std::optional<TrainState> state;
  if (resume) {
    state.emplace(restore_checkpoint(load_checkpoint(*resume)));
    if (!state->adam) throw DataError("checkpoint has no optimiser state to resume from");
  } else {
    state.emplace(TrainState{initial_model(config), std::nullopt, 0});
    state->adam.emplace(AdamConfig{config.train.learning_rate}, state->model.params());
  }
  if (state->model.spec().n_coils != records.front().z.n_coils()) {
    throw DataError("checkpoint coil count does not match the training set");
  }
  std::int64_t const start = state->iteration;
  if (start >= config.train.iterations) {
    out << "checkpoint already at iteration " << start << ", nothing to do\n";
    return;
  }

  std::string log = log_header();
  if (resume) {
    for (auto const &line : earlier_log_lines(config.paths.train_log, start)) log += line;
  }
  TrainHooks hooks;
  hooks.on_log = [&](TrainLogRow const &row) {
    log += log_line(row);
    out << "iter " << row.iteration << "  msm " << row.msm << "  csm " << row.csm << "  total " << row.total << '\n';
  };
  hooks.on_checkpoint = [&](std::int64_t done, Model<float> const &model, AdamState<float> const &adam) {
    save_checkpoint(make_checkpoint(model, &adam, done), config.paths.checkpoint);
    io::write_file_atomic(config.paths.train_log, log);
  };
  try {
    (void)train(views, config.train, state->model, *state->adam, start, hooks);
  } catch (NumericError const &) {
    io::write_file_atomic(config.paths.train_log, log);
    throw;
  }
  out << "wrote " << config.paths.checkpoint.string() << " and " << config.paths.train_log.string() << '\n';
}

void cmd_reconstruct(RunConfig const &config, std::ostream &out) {
  config.validate();
  require_file(config.paths.test_set(), "test set");
  require_file(config.paths.checkpoint, "checkpoint");
  fs::create_directories(config.paths.recon_dir);
  prepare_parent(config.paths.metrics);

  auto const records = load_dataset(config.paths.test_set());
  auto const state = restore_checkpoint(load_checkpoint(config.paths.checkpoint));
  auto const &model = state.model;
  if (!records.empty() && model.spec().n_coils != records.front().z.n_coils()) {
    throw DataError("checkpoint coil count does not match the test set");
  }

  auto const &rs = config.eval.accelerations;
  int const n_rec = static_cast<int>(records.size());
  int const jobs = n_rec * static_cast<int>(rs.size());
  std::vector<std::array<MetricReport, 3>> results(static_cast<std::size_t>(jobs));
  std::mutex out_mutex;

  parallel_for(jobs, thread_cap(config.sample.threads), [&](int job) {
    int const i = job % n_rec;
    double const r = rs[static_cast<std::size_t>(job / n_rec)];
    auto const &rec = records[static_cast<std::size_t>(i)];
    std::uint64_t const mask_seed = config.eval.seed + static_cast<std::uint64_t>(i);

    Mask const mask = make_mask(rec.z.height(), rec.z.width(), r, rec.mask.acs_width, mask_seed);
    KSpace<float> const y = restrict(rec.z, mask);
    auto const truth = cast<double>(rec.ground_truth);
    auto const maps = cast<double>(rec.true_maps);

    Image<double> const zf = zero_filled(cast<double>(y), maps);
    Image<double> const tv = tv_reconstruct(cast<double>(y), maps, config.eval.tv).image;
    SamplerConfig sc = config.sample;
    sc.seed = config.sample.seed + static_cast<std::uint64_t>(i);
    sc.threads = 1;
    Image<double> const cm = cast<double>(reconstruct(y, model, sc).image);

    char stem[64];
    std::snprintf(stem, sizeof stem, "rec%03d", i);
    std::string const tag = std::string(stem) + "_R" + format_r(r);
    if (job < n_rec) write_pgm(config.paths.recon_dir / (std::string(stem) + "_truth.pgm"), truth);
    write_pgm(config.paths.recon_dir / (tag + "_input.pgm"), zf);
    write_pgm(config.paths.recon_dir / (tag + "_tv.pgm"), tv);
    write_pgm(config.paths.recon_dir / (tag + "_cmsm.pgm"), cm);

    auto report = [&](char const *method, Image<double> const &est) {
      return MetricReport{method, r, mask_seed, psnr(truth, est), ssim(truth, est)};
    };
    auto &row = results[static_cast<std::size_t>(job)];
    row = {report(kInputMethod, zf), report(kTvMethod, tv), report(kCmsmMethod, cm)};

    std::lock_guard lock(out_mutex);
    out << tag << std::fixed << std::setprecision(2) << "  input " << row[0].psnr_db << " dB  tv " << row[1].psnr_db
        << " dB  c-msm " << row[2].psnr_db << " dB\n"
        << std::defaultfloat;
  });

  std::vector<MetricReport> reports;
  for (auto const &row : results) reports.insert(reports.end(), row.begin(), row.end());
  io::write_file_atomic(config.paths.metrics, metrics_csv(reports));
  out << "wrote " << reports.size() << " rows to " << config.paths.metrics.string() << '\n';
}

std::vector<AggregateRow> aggregate(std::vector<MetricReport> const &reports) {
  struct Acc {
    std::vector<double> psnr, ssim;
  };
  auto order = [](std::pair<std::string, double> const &a, std::pair<std::string, double> const &b) {
    if (a.second != b.second) return a.second < b.second;
    int const ra = method_rank(a.first), rb = method_rank(b.first);
    if (ra != rb) return ra < rb;
    return a.first < b.first;
  };
  std::map<std::pair<std::string, double>, Acc, decltype(order)> groups(order);
  for (auto const &r : reports) {
    auto &g = groups[{r.method, r.acceleration}];
    g.psnr.push_back(r.psnr_db);
    g.ssim.push_back(r.ssim);
  }
  auto stats = [](std::vector<double> const &v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(var / double(v.size()))};
  };
  std::vector<AggregateRow> rows;
  for (auto const &[k, g] : groups) {
    AggregateRow row{k.first, k.second, g.psnr.size()};
    std::tie(row.psnr_mean, row.psnr_std) = stats(g.psnr);
    std::tie(row.ssim_mean, row.ssim_std) = stats(g.ssim);
    rows.push_back(row);
  }
  return rows;
}

std::string aggregate_table(std::vector<AggregateRow> const &rows) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "method" << std::right << std::setw(6) << "R" << std::setw(6) << "n"
     << std::setw(20) << "PSNR (dB)" << std::setw(20) << "SSIM" << '\n';
  for (auto const &r : rows) {
    char psnr[40], ssim[40];
    std::snprintf(psnr, sizeof psnr, "%.2f ± %.2f", r.psnr_mean, r.psnr_std);
    std::snprintf(ssim, sizeof ssim, "%.4f ± %.4f", r.ssim_mean, r.ssim_std);
    // "±" is two bytes in UTF-8, so pad by one extra column.
    os << std::left << std::setw(8) << r.method << std::right << std::setw(6) << format_r(r.acceleration)
       << std::setw(6) << r.count << std::setw(21) << psnr << std::setw(21) << ssim << '\n';
  }
  return os.str();
}

std::string aggregate_csv(std::vector<AggregateRow> const &rows) {
  std::string s = "method,R,n,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
  char buf[256];
  for (auto const &r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%zu,%.17g,%.17g,%.17g,%.17g\n", r.method.c_str(), r.acceleration, r.count,
                  r.psnr_mean, r.psnr_std, r.ssim_mean, r.ssim_std);
    s += buf;
  }
  return s;
}

void cmd_evaluate(RunConfig const &config, std::vector<fs::path> const &inputs, std::ostream &out) {
  std::vector<fs::path> const files = inputs.empty() ? std::vector<fs::path>{config.paths.metrics} : inputs;
  for (auto const &f : files) require_file(f, "metrics CSV");
  prepare_parent(config.paths.summary);

  std::vector<MetricReport> reports;
  for (auto const &f : files) {
    try {
      auto part = parse_metrics_csv(read_text(f));
      reports.insert(reports.end(), part.begin(), part.end());
    } catch (DataError const &e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
  if (reports.empty()) throw DataError("no metric rows to aggregate");
  auto const rows = aggregate(reports);
  out << aggregate_table(rows);
  io::write_file_atomic(config.paths.summary, aggregate_csv(rows));
}

int exit_code(std::exception const &e) {
  if (dynamic_cast<ConfigError const *>(&e)) return 2;
  if (dynamic_cast<DataError const *>(&e)) return 3;
  if (dynamic_cast<NumericError const *>(&e)) return 4;
  if (dynamic_cast<std::invalid_argument const *>(&e)) return 2;
  return 1;
}

}  // namespace cmsm::app
