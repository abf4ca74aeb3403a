#include "actsel/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace actsel::checkpoint {

namespace {

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001b3ull;
  }
}

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f, const std::string& path) {
  T v;
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ConfigError("checkpoint: " + path + ": truncated");
  return v;
}

void write_spec(std::ofstream& f, const nn::ModelSpec& spec) {
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(spec.layer_widths.size()));
  for (int w : spec.layer_widths) write_pod<std::int32_t>(f, w);
  write_pod<std::uint8_t>(f, spec.activation == nn::Activation::Tanh ? 0 : 1);
  write_pod<std::uint8_t>(f, spec.head == nn::HeadKind::Classifier ? 0 : 1);
  write_pod<std::int32_t>(f, spec.out_dim);
}

nn::ModelSpec read_spec(std::ifstream& f, const std::string& path) {
  nn::ModelSpec spec;
  const auto n = read_pod<std::uint32_t>(f, path);
  spec.layer_widths.resize(n);
  for (auto& w : spec.layer_widths) w = read_pod<std::int32_t>(f, path);
  spec.activation = read_pod<std::uint8_t>(f, path) == 0 ? nn::Activation::Tanh
                                                         : nn::Activation::Relu;
  spec.head = read_pod<std::uint8_t>(f, path) == 0 ? nn::HeadKind::Classifier
                                                   : nn::HeadKind::Encoder;
  spec.out_dim = read_pod<std::int32_t>(f, path);
  return spec;
}

void write_params(std::ofstream& f, const nn::ModelParams& p) {
  write_spec(f, p.spec);
  const std::vector<double> flat = nn::flatten_params(p);
  write_pod<std::uint64_t>(f, flat.size());
  f.write(reinterpret_cast<const char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
}

nn::ModelParams read_params(std::ifstream& f, const std::string& path) {
  const nn::ModelSpec spec = read_spec(f, path);
  nn::ModelParams p = nn::init_params(spec, 0);
  const auto count = read_pod<std::uint64_t>(f, path);
  if (count != nn::param_count(p))
    throw ConfigError("checkpoint: " + path + ": parameter count mismatch");
  std::vector<double> flat(count);
  if (!f.read(reinterpret_cast<char*>(flat.data()),
              static_cast<std::streamsize>(count * sizeof(double))))
    throw ConfigError("checkpoint: " + path + ": truncated parameter blob");
  std::size_t off = 0;
  for (Tensor& w : p.weights) {
    std::memcpy(w.data.data(), flat.data() + off, w.size() * sizeof(double));
    off += w.size();
  }
  for (Tensor& b : p.biases) {
    std::memcpy(b.data.data(), flat.data() + off, b.size() * sizeof(double));
    off += b.size();
  }
  return p;
}

}  // namespace

std::uint64_t spec_digest(const nn::ModelSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (int w : spec.layer_widths) fnv_mix(h, static_cast<std::uint64_t>(w));
  fnv_mix(h, spec.activation == nn::Activation::Tanh ? 0 : 1);
  fnv_mix(h, spec.head == nn::HeadKind::Classifier ? 0 : 1);
  fnv_mix(h, static_cast<std::uint64_t>(spec.out_dim));
  return h;
}

void save_model(const loops::Model& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("checkpoint: cannot open " + path);
  f.write(kMagic, 8);
  write_pod<std::uint32_t>(f, kVersion);
  std::uint64_t digest = spec_digest(model.a.spec);
  if (model.two_tower) digest ^= spec_digest(model.b.spec) * 0x9e3779b97f4a7c15ull;
  write_pod<std::uint64_t>(f, digest);
  write_pod<std::uint8_t>(f, model.two_tower ? 2 : 1);
  write_params(f, model.a);
  if (model.two_tower) write_params(f, model.b);
}

loops::Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("checkpoint: cannot open " + path);
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw ConfigError("checkpoint: " + path + ": bad magic");
  if (read_pod<std::uint32_t>(f, path) != kVersion)
    throw ConfigError("checkpoint: " + path + ": unsupported version");
  const auto digest = read_pod<std::uint64_t>(f, path);
  const auto n_nets = read_pod<std::uint8_t>(f, path);
  loops::Model m;
  m.a = read_params(f, path);
  if (n_nets == 2) {
    m.two_tower = true;
    m.b = read_params(f, path);
  }
  std::uint64_t expect = spec_digest(m.a.spec);
  if (m.two_tower) expect ^= spec_digest(m.b.spec) * 0x9e3779b97f4a7c15ull;
  if (digest != expect)
    throw ConfigError("checkpoint: " + path + ": spec digest mismatch");
  return m;
}

}  // namespace actsel::checkpoint
