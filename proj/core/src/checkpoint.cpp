#include "tsdec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "tsdec/error.hpp"

namespace tsdec {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'S', 'D', 'E', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw CheckpointError("checkpoint " + path.string() + ": truncated file");
  }
  return value;
}

std::string get_string(std::istream& is, std::size_t length, const std::filesystem::path& path) {
  std::string s(length, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(length))) {
    throw CheckpointError("checkpoint " + path.string() + ": truncated file");
  }
  return s;
}

void write_array(std::ostream& os, const std::string& name, const Shape& shape, std::span<const double> data) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) put<std::uint64_t>(os, d);
  os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
}

}  // namespace

const NamedArray* Checkpoint::find_extra(const std::string& name) const {
  for (const auto& a : extra)
    if (a.name == name) return &a;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("checkpoint " + path.string() + ": cannot open for writing");
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kCheckpointVersion);
    const std::string header = nlohmann::json{{"model", checkpoint.config}, {"metadata", checkpoint.metadata}}.dump();
    put<std::uint64_t>(os, header.size());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    const auto params = checkpoint.weights.parameters();
    put<std::uint64_t>(os, params.size() + checkpoint.extra.size());
    for (const auto& p : params) write_array(os, p.name, p.tensor.shape(), p.tensor.data());
    for (const auto& a : checkpoint.extra) write_array(os, a.name, a.shape, a.data);
    if (!os) throw CheckpointError("checkpoint " + path.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint " + path.string() + ": cannot open");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("checkpoint " + path.string() + ": bad magic");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint " + path.string() + ": unsupported format version " + std::to_string(version));
  }
  const auto header_len = get<std::uint64_t>(is, path);
  const auto header = nlohmann::json::parse(get_string(is, header_len, path));

  Checkpoint ck;
  ck.config = header.at("model").get<ModelConfig>();
  ck.config.validate();
  ck.metadata = header.value("metadata", nlohmann::json::object());

  std::map<std::string, NamedArray> arrays;
  const auto count = get<std::uint64_t>(is, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = get_string(is, get<std::uint32_t>(is, path), path);
    const auto rank = get<std::uint32_t>(is, path);
    for (std::uint32_t r = 0; r < rank; ++r) a.shape.push_back(get<std::uint64_t>(is, path));
    a.data.resize(shape_numel(a.shape));
    if (!is.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)))) {
      throw CheckpointError("checkpoint " + path.string() + ": truncated array '" + a.name + "'");
    }
    arrays.emplace(a.name, std::move(a));
  }

  ck.weights = ModelWeights::zeros(ck.config);
  for (auto& p : ck.weights.parameters()) {
    auto it = arrays.find(p.name);
    if (it == arrays.end()) throw CheckpointError("checkpoint " + path.string() + ": missing array '" + p.name + "'");
    if (it->second.shape != p.tensor.shape()) {
      throw CheckpointError("checkpoint " + path.string() + ": array '" + p.name + "' has shape " +
                            shape_to_string(it->second.shape) + ", expected " + shape_to_string(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    std::copy(it->second.data.begin(), it->second.data.end(), dst.begin());
    arrays.erase(it);
  }
  for (auto& [_, a] : arrays) ck.extra.push_back(std::move(a));
  return ck;
}

}  // namespace tsdec
