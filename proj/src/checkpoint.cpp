#include "upswing/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "upswing/errors.hpp"

namespace upswing::harness {

namespace {

constexpr char kMagic[5] = {'E', 'V', 'P', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DomainError("checkpoint: truncated file");
  return v;
}

std::string activation_name(nn::Activation a) {
  return a == nn::Activation::Tanh ? "tanh" : "relu";
}

nn::Activation activation_from(const std::string& s) {
  if (s == "tanh") return nn::Activation::Tanh;
  if (s == "relu") return nn::Activation::ReLU;
  throw DomainError("checkpoint: unknown activation '" + s + "'");
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  if (cp.params.size() != nn::param_count(cp.arch))
    throw ConfigError("checkpoint: parameter count does not match architecture");

  nlohmann::json meta;
  meta["action_scale"] = cp.action_scale;
  meta["arch"] = {{"input_dim", cp.arch.input_dim},
                  {"hidden", cp.arch.hidden_sizes},
                  {"output_dim", cp.arch.output_dim},
                  {"activation", activation_name(cp.arch.hidden_activation)}};
  meta["created_by"] = cp.created_by;
  meta["kind"] = cp.kind == policy::PolicyKind::Gaussian ? "gaussian" : "deterministic";
  meta["noise_variance"] = cp.noise_variance;
  meta["phase"] = cp.phase;
  meta["seed"] = cp.seed;
  meta["system"] = cp.system;
  const std::string meta_text = meta.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint64_t>(meta_text.size()));
  os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
  write_pod(os, static_cast<std::uint64_t>(cp.params.size()));
  os.write(reinterpret_cast<const char*>(cp.params.data()),
           static_cast<std::streamsize>(cp.params.size() * sizeof(double)));
  const std::uint64_t checksum =
      fnv1a64(reinterpret_cast<const unsigned char*>(cp.params.data()),
              cp.params.size() * sizeof(double));
  write_pod(os, checksum);
  if (!os) throw DomainError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("checkpoint: cannot open '" + path + "'");

  char magic[5];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DomainError("checkpoint: bad magic in '" + path + "'");
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion)
    throw DomainError("checkpoint: unsupported format version " + std::to_string(version));

  const auto meta_len = read_pod<std::uint64_t>(is);
  std::string meta_text(meta_len, '\0');
  is.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
  if (!is) throw DomainError("checkpoint: truncated metadata");
  const nlohmann::json meta = nlohmann::json::parse(meta_text);

  Checkpoint cp;
  cp.system = meta.at("system").get<std::string>();
  cp.phase = meta.at("phase").get<std::string>();
  cp.kind = meta.at("kind").get<std::string>() == "gaussian" ? policy::PolicyKind::Gaussian
                                                             : policy::PolicyKind::Deterministic;
  cp.action_scale = meta.at("action_scale").get<double>();
  cp.seed = meta.at("seed").get<std::uint64_t>();
  cp.noise_variance = meta.at("noise_variance").get<double>();
  cp.created_by = meta.at("created_by").get<std::string>();
  const auto& arch = meta.at("arch");
  cp.arch.input_dim = arch.at("input_dim").get<int>();
  cp.arch.hidden_sizes = arch.at("hidden").get<std::vector<int>>();
  cp.arch.output_dim = arch.at("output_dim").get<int>();
  cp.arch.hidden_activation = activation_from(arch.at("activation").get<std::string>());

  const auto n = read_pod<std::uint64_t>(is);
  if (n != nn::param_count(cp.arch))
    throw DomainError("checkpoint: length field does not match the architecture");
  cp.params.resize(n);
  is.read(reinterpret_cast<char*>(cp.params.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw DomainError("checkpoint: truncated parameter block");
  const auto stored = read_pod<std::uint64_t>(is);
  const std::uint64_t computed = fnv1a64(
      reinterpret_cast<const unsigned char*>(cp.params.data()), cp.params.size() * sizeof(double));
  if (stored != computed)
    throw DomainError("checkpoint: parameter block checksum mismatch (corrupt file)");
  for (double v : cp.params)
    if (!std::isfinite(v)) throw DomainError("checkpoint: non-finite parameter");
  return cp;
}

policy::Policy policy_from_checkpoint(const Checkpoint& cp) {
  policy::Policy p;
  p.kind = cp.kind;
  p.arch = cp.arch;
  p.params = cp.params;
  p.action_scale = cp.action_scale;
  policy::validate(p);
  return p;
}

Checkpoint checkpoint_from_policy(const policy::Policy& p, const std::string& system,
                                  const std::string& phase, std::uint64_t seed,
                                  double noise_variance) {
  Checkpoint cp;
  cp.system = system;
  cp.phase = phase;
  cp.kind = p.kind;
  cp.arch = p.arch;
  cp.action_scale = p.action_scale;
  cp.params = p.params;
  cp.seed = seed;
  cp.noise_variance = noise_variance;
  return cp;
}

}  // namespace upswing::harness
