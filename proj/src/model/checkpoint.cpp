#include "scalant/model/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <span>

namespace scalant {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'A', 'L', 'A', 'N', 'T', '1'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void put_doubles(std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    } else {
      for (double v : values) put(v);
    }
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T get() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof v);
    return to_little(v);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) fail("string field too long");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void get_doubles(std::span<double> values) {
    if constexpr (std::endian::native == std::endian::little) {
      read(reinterpret_cast<char*>(values.data()), values.size_bytes());
    } else {
      for (double& v : values) v = get<double>();
    }
  }
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated file");
  }
  [[noreturn]] void fail(const std::string& what) const { throw Error("checkpoint " + path_ + ": " + what); }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const std::map<std::string, std::string>& metadata) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    Writer w(out);
    out.write(kMagic, sizeof kMagic);
    w.put(kCheckpointVersion);
    const auto kv = store.config().to_key_values();
    w.put(static_cast<std::uint32_t>(kv.size()));
    for (const auto& [k, v] : kv) {
      w.put_string(k);
      w.put_string(v);
    }
    w.put(static_cast<std::uint32_t>(metadata.size()));
    for (const auto& [k, v] : metadata) {
      w.put_string(k);
      w.put_string(v);
    }
    w.put(static_cast<std::uint32_t>(store.size()));
    for (std::size_t i = 0; i < store.size(); ++i) {
      const Tensor& t = store.value(i);
      w.put_string(store.info(i).name);
      w.put(static_cast<std::uint32_t>(t.rank()));
      for (auto d : t.shape()) w.put(static_cast<std::uint64_t>(d));
      w.put_doubles(t.data());
    }
    if (!out) throw Error("error while writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[sizeof kMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.fail("not a scalant checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));

  std::vector<std::pair<std::string, std::string>> kv(r.get<std::uint32_t>());
  for (auto& [k, v] : kv) {
    k = r.get_string();
    v = r.get_string();
  }
  std::map<std::string, std::string> metadata;
  for (auto n = r.get<std::uint32_t>(); n > 0; --n) {
    auto k = r.get_string();
    metadata[k] = r.get_string();
  }
  Checkpoint ck{ParameterStore(ModelConfig::from_key_values(kv)), std::move(metadata)};
  ParameterStore& store = ck.store;

  const auto count = r.get<std::uint32_t>();
  if (count != store.size())
    r.fail("holds " + std::to_string(count) + " tensors, configuration expects " + std::to_string(store.size()));
  std::vector<bool> seen(store.size(), false);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = r.get_string();
    const std::size_t id = store.index(name);
    if (seen[id]) r.fail("duplicate tensor " + name);
    seen[id] = true;
    Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    Tensor& dst = store.value(id);
    if (shape != dst.shape()) r.fail("tensor " + name + " has shape " + shape_string(shape));
    r.get_doubles(dst.data());
    if (!dst.all_finite()) r.fail("tensor " + name + " holds non-finite values");
  }
  return ck;
}

ParameterStore average_stores(const std::vector<const ParameterStore*>& stores) {
  if (stores.empty()) throw Error("checkpoint averaging needs at least one store");
  ParameterStore out(stores.front()->config());
  for (const auto* s : stores)
    if (!(s->config() == out.config())) throw Error("cannot average checkpoints with different configurations");
  const double n = static_cast<double>(stores.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto dst = out.value(i).data();
    std::fill(dst.begin(), dst.end(), 0.0);
    for (const auto* s : stores) {
      const auto src = s->value(i).data();
      for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += src[e];
    }
    for (auto& v : dst) v /= n;
  }
  return out;
}

ParameterStore average_checkpoints(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw Error("checkpoint averaging needs at least one path");
  std::vector<ParameterStore> stores;
  stores.reserve(paths.size());
  for (const auto& p : paths) stores.push_back(load_checkpoint(p).store);
  std::vector<const ParameterStore*> ptrs;
  for (const auto& s : stores) ptrs.push_back(&s);
  return average_stores(ptrs);
}

}  // namespace scalant
