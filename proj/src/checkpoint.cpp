#include "rsimp/checkpoint.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rsimp/io.hpp"

using nlohmann::json;

namespace rsimp {

namespace {

constexpr char kMagic[7] = {'R', 'S', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}
void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  const char* take(size_t n) {
    if (pos_ + n > data_.size())
      throw std::runtime_error("truncated checkpoint file: " + path_);
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  uint16_t u16() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(2));
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
  }
  uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(4));
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  uint64_t u64() {
    const auto* p = reinterpret_cast<const unsigned char*>(take(8));
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

void write_tensors(std::string& out, const ParamMap<float>& tensors) {
  for (const auto& [name, t] : tensors) {  // std::map: lexicographic order
    put_u16(out, static_cast<uint16_t>(name.size()));
    out += name;
    out.push_back(static_cast<char>(t.rank()));
    for (int64_t d : t.shape()) put_u64(out, static_cast<uint64_t>(d));
    for (int64_t i = 0; i < t.numel(); ++i) put_f32(out, t[i]);
  }
}

ParamMap<float> read_tensors(Reader& r, size_t count) {
  ParamMap<float> tensors;
  for (size_t k = 0; k < count; ++k) {
    const uint16_t name_len = r.u16();
    std::string name(r.take(name_len), name_len);
    const auto rank = static_cast<uint8_t>(*r.take(1));
    std::vector<int64_t> shape;
    for (uint8_t d = 0; d < rank; ++d) shape.push_back(static_cast<int64_t>(r.u64()));
    Tensor<float> t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = r.f32();
    tensors.emplace(std::move(name), std::move(t));
  }
  return tensors;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);

  json config;
  config["model"] = ckpt.model_config;
  config["epoch"] = ckpt.epoch;
  const std::string config_str = config.dump();
  put_u64(out, config_str.size());
  out += config_str;

  write_tensors(out, ckpt.parameters);
  write_tensors(out, ckpt.adam_m);
  write_tensors(out, ckpt.adam_v);

  put_u64(out, ckpt.step);
  for (uint64_t w : ckpt.rng_state) put_u64(out, w);
  put_f64(out, ckpt.best_val_loss);

  write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string data = read_file(path);
  Reader r(data, path);

  const char* magic = r.take(sizeof(kMagic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);

  const uint64_t config_len = r.u64();
  const json config = json::parse(std::string(r.take(config_len), config_len));

  Checkpoint ckpt;
  ckpt.model_config = config.at("model").get<ModelConfig>();
  ckpt.epoch = config.at("epoch").get<int64_t>();

  const size_t tensor_count = detail::parameter_specs(ckpt.model_config).size();
  ckpt.parameters = read_tensors(r, tensor_count);
  ckpt.adam_m = read_tensors(r, tensor_count);
  ckpt.adam_v = read_tensors(r, tensor_count);

  ckpt.step = r.u64();
  for (auto& w : ckpt.rng_state) w = r.u64();
  ckpt.best_val_loss = r.f64();
  if (!r.done())
    throw std::runtime_error("trailing bytes in checkpoint file: " + path);
  return ckpt;
}

}  // namespace rsimp
