#include "touchdigits/nn/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace touchdigits::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'D', 'C', 'K'};

template <typename U>
void put(std::string& out, U value) {
  char buf[sizeof(U)];
  std::memcpy(buf, &value, sizeof(U));
  out.append(buf, sizeof(U));
}

template <typename U>
U take(const std::string& in, std::size_t& offset) {
  if (offset + sizeof(U) > in.size()) throw FormatError("checkpoint truncated");
  U value;
  std::memcpy(&value, in.data() + offset, sizeof(U));
  offset += sizeof(U);
  return value;
}

void put_floats(std::string& out, const Tensor<float>& t) {
  out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
}

Tensor<float> take_floats(const std::string& in, std::size_t& offset, const Shape& shape) {
  const std::size_t count = element_count(shape);
  const std::size_t bytes = count * sizeof(float);
  if (offset + bytes > in.size()) throw FormatError("checkpoint truncated in tensor data");
  std::vector<float> data(count);
  std::memcpy(data.data(), in.data() + offset, bytes);
  offset += bytes;
  return Tensor<float>(shape, std::move(data));
}

std::uint32_t crc(const char* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  // Validates spec/params agreement before anything is written.
  Network<float> shape_check(checkpoint.spec);
  if (checkpoint.params.size() != shape_check.params().size()) {
    throw ShapeError("checkpoint parameter list does not match the model");
  }
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
    const auto& p = checkpoint.params[i];
    const auto& expected = shape_check.params()[i];
    if (p.weights.shape() != expected.weights.shape() ||
        p.biases.shape() != expected.biases.shape()) {
      throw ShapeError("checkpoint tensor shape mismatch at layer " + std::to_string(i));
    }
    if (p.empty()) continue;
    tensors.push_back({{"layer", i},
                       {"weights", p.weights.shape()},
                       {"biases", p.biases.shape()}});
  }

  const nlohmann::json header{
      {"format", "touchdigits-checkpoint"},
      {"version", kCheckpointVersion},
      {"model", checkpoint.spec},
      {"normalization",
       {{"length_mean", checkpoint.normalization.length_mean},
        {"length_std", checkpoint.normalization.length_std}}},
      {"class_median_arclength", checkpoint.class_median_arclength},
      {"seed", checkpoint.seed},
      {"metadata", checkpoint.metadata},
      {"tensors", tensors},
  };
  const std::string header_text = header.dump();

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  for (const auto& p : checkpoint.params) {
    if (p.empty()) continue;
    put_floats(out, p.weights);
    put_floats(out, p.biases);
  }
  put<std::uint32_t>(out, crc(out.data(), out.size()));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint32_t);
  std::size_t tail = body;
  if (take<std::uint32_t>(bytes, tail) != crc(bytes.data(), body)) {
    throw FormatError("checkpoint checksum mismatch");
  }
  std::size_t offset = sizeof(kMagic);
  const auto version = take<std::uint32_t>(bytes, offset);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_size = take<std::uint64_t>(bytes, offset);
  if (offset + header_size > body) throw FormatError("checkpoint header truncated");
  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                              bytes.begin() + static_cast<std::ptrdiff_t>(offset + header_size));
    ck.spec = header.at("model").get<ModelSpec>();
    ck.normalization.length_mean = header.at("normalization").at("length_mean").get<double>();
    ck.normalization.length_std = header.at("normalization").at("length_std").get<double>();
    ck.class_median_arclength = header.at("class_median_arclength").get<std::array<double, 10>>();
    ck.seed = header.at("seed").get<std::uint64_t>();
    ck.metadata = header.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  offset += header_size;

  Network<float> layout(ck.spec);
  ck.params = layout.params();
  for (auto& p : ck.params) {
    if (p.empty()) continue;
    p.weights = take_floats(bytes, offset, p.weights.shape());
    p.biases = take_floats(bytes, offset, p.biases.shape());
  }
  if (offset != body) throw FormatError("trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

Checkpoint make_checkpoint(const Network<float>& network) {
  Checkpoint ck;
  ck.spec = network.spec();
  ck.params = network.params();
  return ck;
}

Network<float> make_network(const Checkpoint& checkpoint) {
  Network<float> net(checkpoint.spec);
  if (checkpoint.params.size() != net.params().size()) {
    throw ShapeError("checkpoint parameter list does not match the model");
  }
  for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
    if (checkpoint.params[i].weights.shape() != net.params()[i].weights.shape() ||
        checkpoint.params[i].biases.shape() != net.params()[i].biases.shape()) {
      throw ShapeError("checkpoint tensor shape mismatch at layer " + std::to_string(i));
    }
  }
  net.params() = checkpoint.params;
  return net;
}

}  // namespace touchdigits::nn
