#include "cmsm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <limits>

#include "cmsm/binary_io.hpp"

namespace cmsm {

NamedTensor const *Checkpoint::find(std::string const &name) const {
  for (auto const &t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

NamedTensor const &Checkpoint::get(std::string const &name) const {
  auto const *t = find(name);
  if (!t) throw DataError("checkpoint: missing tensor '" + name + "'");
  return *t;
}

void Checkpoint::add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  if (n != data.size()) throw std::invalid_argument("checkpoint: tensor '" + name + "' dims do not match data");
  if (find(name)) throw std::invalid_argument("checkpoint: duplicate tensor '" + name + "'");
  tensors.push_back({std::move(name), std::move(dims), std::move(data)});
}

void Checkpoint::add_scalar(std::string name, double value) {
  auto const bits = std::bit_cast<std::array<float, 2>>(value);
  add(std::move(name), {2}, {bits[0], bits[1]});
}

double Checkpoint::scalar(std::string const &name) const {
  auto const &t = get(name);
  if (t.data.size() != 2) throw DataError("checkpoint: '" + name + "' is not a scalar");
  return std::bit_cast<double>(std::array<float, 2>{t.data[0], t.data[1]});
}

std::vector<std::uint8_t> encode_checkpoint(Checkpoint const &ckpt) {
  io::Writer w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (auto const &t : ckpt.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) throw std::invalid_argument("checkpoint: name too long");
    if (t.dims.size() > std::numeric_limits<std::uint8_t>::max()) throw std::invalid_argument("checkpoint: too many dims");
    w.put(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes(t.name);
    w.put(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.put(d);
    for (float v : t.data) w.put(v);
  }
  return w.bytes();
}

Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes) {
  io::Reader r(std::move(bytes), "checkpoint");
  io::expect_magic(r, std::string_view(kCheckpointMagic, 4));
  auto const version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw VersionError("checkpoint: unsupported version " + std::to_string(version));
  auto const count = r.get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.get_string(r.get<std::uint16_t>());
    auto const nd = r.get<std::uint8_t>();
    std::size_t n = 1;
    for (int d = 0; d < nd; ++d) {
      t.dims.push_back(r.get<std::uint32_t>());
      n *= t.dims.back();
    }
    r.need(n * sizeof(float));
    t.data.resize(n);
    for (auto &v : t.data) v = r.get<float>();
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) throw DataError("checkpoint: trailing bytes after last tensor");
  return ckpt;
}

void save_checkpoint(Checkpoint const &ckpt, std::filesystem::path const &path) {
  io::write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(std::filesystem::path const &path) { return decode_checkpoint(io::read_file(path)); }

namespace {

std::vector<int> channels_of(ConvNetSpec const &spec) {
  std::vector<int> c{spec.in_channels()};
  for (auto const &l : spec.layers) c.push_back(l.out_channels);
  return c;
}

std::vector<int> dilations_of(ConvNetSpec const &spec) {
  std::vector<int> d;
  for (auto const &l : spec.layers) d.push_back(l.dilation);
  return d;
}

std::vector<int> contexts_of(ConvNetSpec const &spec) {
  std::vector<int> g;
  for (auto const &l : spec.layers) g.push_back(l.global_context ? 1 : 0);
  return g;
}

ConvNetSpec rebuild(std::vector<int> const &channels, bool residual, std::vector<int> const &dilations,
                    std::vector<int> const &contexts) {
  auto spec = ConvNetSpec::chain(channels, residual, dilations);
  if (!contexts.empty() && contexts.size() != spec.layers.size()) throw DataError("checkpoint: context flags do not match layers");
  for (std::size_t i = 0; i < contexts.size(); ++i) spec.layers[i].global_context = contexts[i] != 0;
  return spec;
}

void add_arch(Checkpoint &c, std::string const &prefix, ConvNetSpec const &spec) {
  auto const channels = channels_of(spec);
  auto const dilations = dilations_of(spec);
  auto const contexts = contexts_of(spec);
  if (spec != rebuild(channels, spec.residual, dilations, contexts)) {
    throw std::invalid_argument("checkpoint: only 3x3 relu chains can be serialized");
  }
  c.add("arch." + prefix + ".channels", {std::uint32_t(channels.size())}, {channels.begin(), channels.end()});
  c.add("arch." + prefix + ".dilations", {std::uint32_t(dilations.size())}, {dilations.begin(), dilations.end()});
  c.add("arch." + prefix + ".context", {std::uint32_t(contexts.size())}, {contexts.begin(), contexts.end()});
  c.add_scalar("arch." + prefix + ".residual", spec.residual ? 1 : 0);
}

ConvNetSpec spec_from(Checkpoint const &ckpt, std::string const &prefix) {
  auto ints = [&](std::string const &name) {
    std::vector<int> v;
    for (float x : ckpt.get("arch." + prefix + "." + name).data) v.push_back(static_cast<int>(x));
    return v;
  };
  bool const residual = ckpt.scalar("arch." + prefix + ".residual") != 0.0;
  // Older files carry no dilation or context lists.
  auto optional = [&](std::string const &name) {
    return ckpt.find("arch." + prefix + "." + name) ? ints(name) : std::vector<int>{};
  };
  return rebuild(ints("channels"), residual, optional("dilations"), optional("context"));
}

std::vector<std::uint32_t> dims_of(Param<float> const &p) {
  return {p.shape.begin(), p.shape.end()};
}

}  // namespace

Checkpoint make_checkpoint(Model<float> const &model, AdamState<float> const *adam, std::int64_t iteration) {
  Checkpoint c;
  auto const &spec = model.spec();
  add_arch(c, "denoiser", spec.denoiser);
  add_arch(c, "csm", spec.csm);
  c.add_scalar("meta.n_coils", spec.n_coils);
  c.add_scalar("schedule.sigma_min", spec.schedule.sigma_min);
  c.add_scalar("schedule.sigma_max", spec.schedule.sigma_max);
  c.add_scalar("schedule.steps", spec.schedule.steps);
  c.add_scalar("train.iteration", double(iteration));
  for (auto const &p : model.params()) c.add(p.name, dims_of(p), p.values);
  if (adam) {
    c.add_scalar("adam.step", double(adam->step));
    c.add_scalar("adam.learning_rate", adam->config.learning_rate);
    c.add_scalar("adam.beta1", adam->config.beta1);
    c.add_scalar("adam.beta2", adam->config.beta2);
    c.add_scalar("adam.epsilon", adam->config.epsilon);
    std::size_t i = 0;
    for (auto const &p : model.params()) {
      c.add("adam.m." + p.name, dims_of(p), adam->m[i]);
      c.add("adam.v." + p.name, dims_of(p), adam->v[i]);
      ++i;
    }
  }
  return c;
}

TrainState restore_checkpoint(Checkpoint const &ckpt) {
  ModelSpec spec;
  spec.n_coils = static_cast<int>(ckpt.scalar("meta.n_coils"));
  spec.denoiser = spec_from(ckpt, "denoiser");
  spec.csm = spec_from(ckpt, "csm");
  spec.schedule.sigma_min = ckpt.scalar("schedule.sigma_min");
  spec.schedule.sigma_max = ckpt.scalar("schedule.sigma_max");
  spec.schedule.steps = static_cast<int>(ckpt.scalar("schedule.steps"));
  try {
    spec.validate();
  } catch (std::invalid_argument const &e) {
    throw DataError(std::string("checkpoint: invalid architecture: ") + e.what());
  }
  TrainState st{Model<float>(spec, 0), std::nullopt, 0};
  if (auto const *it = ckpt.find("train.iteration")) st.iteration = static_cast<std::int64_t>(ckpt.scalar(it->name));
  for (auto &p : st.model.params()) {
    auto const &t = ckpt.get(p.name);
    if (t.data.size() != p.size()) throw DataError("checkpoint: size mismatch for '" + p.name + "'");
    p.values = t.data;
  }
  if (auto const *step = ckpt.find("adam.step")) {
    AdamConfig cfg;
    cfg.learning_rate = ckpt.scalar("adam.learning_rate");
    cfg.beta1 = ckpt.scalar("adam.beta1");
    cfg.beta2 = ckpt.scalar("adam.beta2");
    cfg.epsilon = ckpt.scalar("adam.epsilon");
    AdamState<float> adam(cfg, st.model.params());
    adam.step = static_cast<std::int64_t>(ckpt.scalar(step->name));
    std::size_t i = 0;
    for (auto const &p : st.model.params()) {
      adam.m[i] = ckpt.get("adam.m." + p.name).data;
      adam.v[i] = ckpt.get("adam.v." + p.name).data;
      if (adam.m[i].size() != p.size() || adam.v[i].size() != p.size()) {
        throw DataError("checkpoint: optimizer state size mismatch for '" + p.name + "'");
      }
      ++i;
    }
    st.adam = std::move(adam);
  }
  return st;
}

}  // namespace cmsm
