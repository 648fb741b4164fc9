#include "gemcl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gemcl/rng.hpp"

namespace gemcl {

namespace {

constexpr char kMagic[4] = {'G', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_array(std::ostream& out, const std::string& name, const std::vector<double>& data) {
  write_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u64(out, data.size());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

std::pair<std::string, std::vector<double>> read_array(std::istream& in) {
  std::uint32_t name_len = read_u32(in);
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  std::uint64_t count = read_u64(in);
  std::vector<double> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  return {std::move(name), std::move(data)};
}

}  // namespace

void save_checkpoint(const std::string& path, const GemclModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, model.identity_encoder ? 1u : 0u);
  write_u32(out, static_cast<std::uint32_t>(model.encoder.hidden));
  write_u32(out, static_cast<std::uint32_t>(model.encoder.out_dim));
  write_u32(out, static_cast<std::uint32_t>(model.encoder.in_dim / 2));
  write_u64(out, model.init_seed);
  write_f64(out, model.priors.raw_alpha0);
  write_f64(out, model.priors.raw_beta0);
  write_u32(out, 4);  // array count
  write_array(out, "encoder.w1", model.encoder.w1);
  write_array(out, "encoder.b1", model.encoder.b1);
  write_array(out, "encoder.w2", model.encoder.w2);
  write_array(out, "encoder.b2", model.encoder.b2);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

GemclModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4] = {0};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                             ": " + path);
  GemclModel model;
  model.identity_encoder = read_u32(in) != 0;
  std::uint32_t hidden = read_u32(in);
  std::uint32_t out_dim = read_u32(in);
  std::uint32_t n_coeffs = read_u32(in);
  model.init_seed = read_u64(in);
  model.priors.raw_alpha0 = read_f64(in);
  model.priors.raw_beta0 = read_f64(in);
  model.encoder.hidden = static_cast<int>(hidden);
  model.encoder.out_dim = static_cast<int>(out_dim);
  model.encoder.in_dim = static_cast<int>(2 * n_coeffs);

  std::uint32_t n_arrays = read_u32(in);
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    auto [name, data] = read_array(in);
    if (name == "encoder.w1")
      model.encoder.w1 = std::move(data);
    else if (name == "encoder.b1")
      model.encoder.b1 = std::move(data);
    else if (name == "encoder.w2")
      model.encoder.w2 = std::move(data);
    else if (name == "encoder.b2")
      model.encoder.b2 = std::move(data);
    else
      throw std::runtime_error("unknown checkpoint array '" + name + "': " + path);
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);

  if (model.encoder.w1.size() !=
          static_cast<std::size_t>(model.encoder.hidden) * model.encoder.in_dim ||
      model.encoder.b1.size() != static_cast<std::size_t>(model.encoder.hidden) ||
      model.encoder.w2.size() !=
          static_cast<std::size_t>(model.encoder.out_dim) * model.encoder.hidden ||
      model.encoder.b2.size() != static_cast<std::size_t>(model.encoder.out_dim))
    throw std::runtime_error("checkpoint arrays do not match header shapes: " + path);
  return model;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace gemcl
