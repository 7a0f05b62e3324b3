#include "seq3/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "seq3/errors.hpp"

namespace seq3 {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', '3', 'C', 'K', 'P', 'T'};
constexpr char kEnd[4] = {'E', 'N', 'D', '!'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  template <typename T>
  void pod(T v) {
    v = to_little(v);
    bytes(&v, sizeof v);
  }
  void u32(std::uint32_t v) { pod(v); }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void doubles(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return to_little(v);
  }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(pod<std::uint64_t>()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles(std::uint64_t n) {
    need_elements(n, sizeof(double));
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  void need_elements(std::uint64_t n, std::size_t width) {
    if (n > (data_.size() - pos_) / width) corrupt("truncated");
  }
  bool at_end() const { return pos_ == data_.size(); }
  [[noreturn]] void corrupt(const std::string& what) const {
    throw CorruptFileError("checkpoint " + source_ + ": " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::uint64_t n) {
    if (n > data_.size() - pos_) corrupt("truncated");
  }
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.str(ck.kind);
  w.str(ck.config);
  w.str(ck.echo);
  w.u64(ck.vocab_hash);
  w.u64(ck.epoch);
  w.u64(ck.step);
  w.u64(ck.tensors.size());
  for (const auto& t : ck.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    w.doubles(t.values);
  }
  w.u64(ck.adam_steps);
  w.u64(ck.moments.size());
  for (const auto& [name, mv] : ck.moments) {
    w.str(name);
    w.u64(mv.first.size());
    w.doubles(mv.first);
    w.doubles(mv.second);
  }
  w.str(ck.rng_state);
  w.bytes(kEnd, sizeof kEnd);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data), path.string());

  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.corrupt("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CompatibilityError("checkpoint " + path.string() + " has format version " + std::to_string(version) +
                             ", expected " + std::to_string(kCheckpointVersion));
  Checkpoint ck;
  ck.kind = r.str();
  ck.config = r.str();
  ck.echo = r.str();
  ck.vocab_hash = r.u64();
  ck.epoch = r.u64();
  ck.step = r.u64();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    TensorRecord t;
    t.name = r.str();
    const std::uint32_t rank = r.u32();
    r.need_elements(rank, sizeof(std::uint64_t));
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint64_t d = r.u64();
      t.shape.push_back(d);
      if (d != 0 && n > UINT64_MAX / d) r.corrupt("tensor size overflow");
      n *= d;
    }
    t.values = r.doubles(n);
    ck.tensors.push_back(std::move(t));
  }
  ck.adam_steps = r.u64();
  const std::uint64_t moments = r.u64();
  for (std::uint64_t i = 0; i < moments; ++i) {
    std::string name = r.str();
    const std::uint64_t n = r.u64();
    auto m = r.doubles(n);
    auto v = r.doubles(n);
    ck.moments.emplace(std::move(name), std::make_pair(std::move(m), std::move(v)));
  }
  ck.rng_state = r.str();
  char end[sizeof kEnd];
  r.bytes(end, sizeof end);
  if (std::memcmp(end, kEnd, sizeof kEnd) != 0 || !r.at_end()) r.corrupt("bad trailer");
  return ck;
}

std::vector<TensorRecord> snapshot(const ParameterStore& store) {
  std::vector<TensorRecord> out;
  for (const auto& [name, t] : store.items())
    out.push_back({name, t.shape(), std::vector<double>(t.values().begin(), t.values().end())});
  return out;
}

void restore(ParameterStore& store, const std::vector<TensorRecord>& tensors) {
  if (tensors.size() != store.items().size())
    throw CompatibilityError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, model has " +
                             std::to_string(store.items().size()));
  for (const auto& rec : tensors) {
    if (!store.contains(rec.name)) throw CompatibilityError("checkpoint tensor '" + rec.name + "' unknown to model");
    ad::Tensor t = store.get(rec.name);
    if (t.shape() != rec.shape)
      throw CompatibilityError("checkpoint tensor '" + rec.name + "' has shape " + ad::shape_str(rec.shape) +
                               ", model expects " + ad::shape_str(t.shape()));
    std::copy(rec.values.begin(), rec.values.end(), t.mutable_values().begin());
  }
}

void capture_optimizer(Checkpoint& ck, const Adam& adam) {
  ck.adam_steps = adam.steps();
  ck.moments = adam.moments();
}

void restore_optimizer(const Checkpoint& ck, Adam& adam) { adam.restore(ck.adam_steps, ck.moments); }

}  // namespace seq3
