#include "sea/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace sea::ad {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'A', 'C', 'K', 'P', 'T', '\0'};

template <typename U>
void put_uint(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_string32(std::string& out, const std::string& s) {
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("checkpoint: truncated file");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(std::string name, Matrix value) {
  if (contains(name)) throw Error("checkpoint: duplicate tensor '" + name + "'");
  tensors.push_back(NamedTensor{std::move(name), std::move(value)});
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

const Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw Error("checkpoint: missing tensor '" + name + "'");
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw Error("checkpoint: missing metadata '" + key + "'");
  return it->second;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, kMagic + 8);
  put_uint<std::uint32_t>(out, kCheckpointVersion);
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put_string32(out, t.name);
    put_uint<std::uint64_t>(out, t.value.rows());
    put_uint<std::uint64_t>(out, t.value.cols());
  }
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_string32(out, k);
    put_uint<std::uint64_t>(out, v.size());
    out += v;
  }
  for (const auto& t : ckpt.tensors)
    for (double d : t.value.values()) put_uint<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(8) != std::string(kMagic, kMagic + 8)) throw Error("checkpoint: bad magic");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n = r.uint<std::uint32_t>();
  std::vector<std::pair<std::string, std::pair<std::uint64_t, std::uint64_t>>> manifest;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.bytes(r.uint<std::uint32_t>());
    const auto rows = r.uint<std::uint64_t>();
    const auto cols = r.uint<std::uint64_t>();
    manifest.push_back({std::move(name), {rows, cols}});
  }
  const auto nm = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < nm; ++i) {
    std::string key = r.bytes(r.uint<std::uint32_t>());
    std::string value = r.bytes(static_cast<std::size_t>(r.uint<std::uint64_t>()));
    ckpt.meta.emplace(std::move(key), std::move(value));
  }
  for (auto& [name, shape] : manifest) {
    Matrix m(shape.first, shape.second);
    for (double& d : m.values()) d = std::bit_cast<double>(r.uint<std::uint64_t>());
    ckpt.add(std::move(name), std::move(m));
  }
  if (!r.at_end()) throw Error("checkpoint: trailing bytes after payload");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("checkpoint: cannot open '" + tmp.string() + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("checkpoint: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("checkpoint: cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void store_parameters(Checkpoint& ckpt, const std::string& prefix, const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) ckpt.add(prefix + p->name, p->value);
}

void load_parameters(const Checkpoint& ckpt, const std::string& prefix, const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    const Matrix& m = ckpt.tensor(prefix + p->name);
    if (!m.same_shape(p->value)) {
      throw Error("checkpoint: tensor '" + prefix + p->name + "' has shape " + m.shape_string() +
                  ", expected " + p->value.shape_string());
    }
    p->value = m;
    p->zero_grad();
  }
}

void store_adam(Checkpoint& ckpt, const std::string& prefix, const Adam& adam) {
  ckpt.add(prefix + "steps", Matrix(1, 1, static_cast<double>(adam.step_count())));
  for (std::size_t i = 0; i < adam.params().size(); ++i) {
    const std::string& n = adam.params()[i]->name;
    ckpt.add(prefix + "m/" + n, adam.first_moments()[i]);
    ckpt.add(prefix + "v/" + n, adam.second_moments()[i]);
  }
}

void load_adam(const Checkpoint& ckpt, const std::string& prefix, Adam& adam) {
  const auto steps = static_cast<std::uint64_t>(ckpt.tensor(prefix + "steps")(0, 0));
  std::vector<Matrix> m, v;
  for (const Parameter* p : adam.params()) {
    m.push_back(ckpt.tensor(prefix + "m/" + p->name));
    v.push_back(ckpt.tensor(prefix + "v/" + p->name));
  }
  adam.restore(steps, std::move(m), std::move(v));
}

}  // namespace sea::ad
