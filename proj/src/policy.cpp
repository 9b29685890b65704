#include "uedlab/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "uedlab/error.hpp"

namespace ued {

std::size_t NetworkShape::parameter_count() const { return ParamLayout(*this).total; }

ParamLayout::ParamLayout(const NetworkShape& s) {
  const auto in = static_cast<std::size_t>(s.input);
  const auto h1 = static_cast<std::size_t>(s.hidden1);
  const auto h2 = static_cast<std::size_t>(s.hidden2);
  w1 = 0;
  b1 = w1 + in * h1;
  w2 = b1 + h1;
  b2 = w2 + h1 * h2;
  wpi = b2 + h2;
  bpi = wpi + h2 * kNumActions;
  wv = bpi + kNumActions;
  bv = wv + h2;
  total = bv + 1;
}

PolicyParams init_policy(const NetworkShape& shape, Rng& rng) {
  if (shape.input < 1 || shape.hidden1 < 1 || shape.hidden2 < 1)
    throw InvalidArgument("network layer sizes must be positive");
  PolicyParams p;
  p.shape = shape;
  const ParamLayout L(shape);
  p.weights.assign(L.total, 0.0);
  auto fill = [&](std::size_t off, std::size_t count, double scale) {
    for (std::size_t i = 0; i < count; ++i) p.weights[off + i] = scale * rng.normal();
  };
  const auto in = static_cast<std::size_t>(shape.input);
  const auto h1 = static_cast<std::size_t>(shape.hidden1);
  const auto h2 = static_cast<std::size_t>(shape.hidden2);
  fill(L.w1, in * h1, 1.0 / std::sqrt(static_cast<double>(in)));
  fill(L.w2, h1 * h2, 1.0 / std::sqrt(static_cast<double>(h1)));
  // Small policy head keeps the initial policy close to uniform.
  fill(L.wpi, h2 * kNumActions, 0.01 / std::sqrt(static_cast<double>(h2)));
  fill(L.wv, h2, 1.0 / std::sqrt(static_cast<double>(h2)));
  p.adam_m.assign(L.total, 0.0);
  p.adam_v.assign(L.total, 0.0);
  return p;
}

void forward(const PolicyParams& params, std::span<const double> x, ForwardCache& cache) {
  const NetworkShape& s = params.shape;
  if (x.size() != static_cast<std::size_t>(s.input))
    throw InvalidArgument("feature length " + std::to_string(x.size()) +
                          " does not match network input " + std::to_string(s.input));
  const ParamLayout L(s);
  const double* w = params.weights.data();
  const auto h1 = static_cast<std::size_t>(s.hidden1);
  const auto h2 = static_cast<std::size_t>(s.hidden2);

  cache.hidden1.assign(w + L.b1, w + L.b1 + h1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;  // one-hot inputs are mostly zero
    const double* col = w + L.w1 + i * h1;
    for (std::size_t j = 0; j < h1; ++j) cache.hidden1[j] += xi * col[j];
  }
  for (double& v : cache.hidden1) v = std::tanh(v);

  cache.hidden2.assign(w + L.b2, w + L.b2 + h2);
  for (std::size_t i = 0; i < h1; ++i) {
    const double a = cache.hidden1[i];
    const double* col = w + L.w2 + i * h2;
    for (std::size_t j = 0; j < h2; ++j) cache.hidden2[j] += a * col[j];
  }
  for (double& v : cache.hidden2) v = std::tanh(v);

  for (int k = 0; k < kNumActions; ++k) cache.logits[k] = w[L.bpi + static_cast<std::size_t>(k)];
  double value = w[L.bv];
  for (std::size_t i = 0; i < h2; ++i) {
    const double a = cache.hidden2[i];
    const double* row = w + L.wpi + i * kNumActions;
    for (int k = 0; k < kNumActions; ++k) cache.logits[k] += a * row[k];
    value += a * w[L.wv + i];
  }
  cache.value = value;
}

void backward(const PolicyParams& params, std::span<const double> x, const ForwardCache& cache,
              std::span<const double, kNumActions> dlogits, double dvalue, std::span<double> grad) {
  const NetworkShape& s = params.shape;
  const ParamLayout L(s);
  const double* w = params.weights.data();
  double* g = grad.data();
  const auto h1 = static_cast<std::size_t>(s.hidden1);
  const auto h2 = static_cast<std::size_t>(s.hidden2);

  std::vector<double> dz2(h2);
  for (std::size_t i = 0; i < h2; ++i) {
    const double a = cache.hidden2[i];
    double da = dvalue * w[L.wv + i];
    for (int k = 0; k < kNumActions; ++k) {
      g[L.wpi + i * kNumActions + static_cast<std::size_t>(k)] += dlogits[static_cast<std::size_t>(k)] * a;
      da += dlogits[static_cast<std::size_t>(k)] * w[L.wpi + i * kNumActions + static_cast<std::size_t>(k)];
    }
    g[L.wv + i] += dvalue * a;
    dz2[i] = da * (1.0 - a * a);
  }
  for (int k = 0; k < kNumActions; ++k) g[L.bpi + static_cast<std::size_t>(k)] += dlogits[static_cast<std::size_t>(k)];
  g[L.bv] += dvalue;

  std::vector<double> dz1(h1);
  for (std::size_t i = 0; i < h1; ++i) {
    const double a = cache.hidden1[i];
    const double* col = w + L.w2 + i * h2;
    double* gcol = g + L.w2 + i * h2;
    double da = 0.0;
    for (std::size_t j = 0; j < h2; ++j) {
      gcol[j] += a * dz2[j];
      da += col[j] * dz2[j];
    }
    dz1[i] = da * (1.0 - a * a);
  }
  for (std::size_t j = 0; j < h2; ++j) g[L.b2 + j] += dz2[j];

  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    double* gcol = g + L.w1 + i * h1;
    for (std::size_t j = 0; j < h1; ++j) gcol[j] += xi * dz1[j];
  }
  for (std::size_t j = 0; j < h1; ++j) g[L.b1 + j] += dz1[j];
}

void log_softmax(std::span<const double, kNumActions> logits, std::span<double, kNumActions> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double lse = m + std::log(z);
  for (std::size_t k = 0; k < kNumActions; ++k) out[k] = logits[k] - lse;
}

namespace {

void check_finite(const ForwardCache& c) {
  bool ok = std::isfinite(c.value);
  for (double l : c.logits) ok = ok && std::isfinite(l);
  if (!ok) throw NumericError("policy network produced a non-finite output");
}

}  // namespace

ActResult act(const PolicyParams& params, std::span<const double> features, Rng& rng) {
  ForwardCache cache;
  forward(params, features, cache);
  check_finite(cache);
  double logp[kNumActions];
  log_softmax(cache.logits, logp);
  const double u = rng.uniform();
  double cum = 0.0;
  int chosen = kNumActions - 1;
  for (int k = 0; k < kNumActions; ++k) {
    cum += std::exp(logp[k]);
    if (u < cum) {
      chosen = k;
      break;
    }
  }
  return {static_cast<Action>(chosen), logp[chosen], cache.value};
}

ActResult act_greedy(const PolicyParams& params, std::span<const double> features) {
  ForwardCache cache;
  forward(params, features, cache);
  check_finite(cache);
  double logp[kNumActions];
  log_softmax(cache.logits, logp);
  int best = 0;
  for (int k = 1; k < kNumActions; ++k)
    if (cache.logits[k] > cache.logits[best]) best = k;
  return {static_cast<Action>(best), logp[best], cache.value};
}

// Checkpoint format, all integers and doubles little-endian:
//   "UEDCKPT\0" | u32 version | u32 array count
//   per array: u32 name length | name | u32 rank | u64 dims[rank] | f64 data
namespace {

constexpr char kMagic[8] = {'U', 'E', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U u;
  std::memcpy(&u, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, &u, sizeof(T));
    return v;
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::vector<NamedArray> to_arrays(const PolicyParams& p) {
  const ParamLayout L(p.shape);
  const auto in = static_cast<std::uint64_t>(p.shape.input);
  const auto h1 = static_cast<std::uint64_t>(p.shape.hidden1);
  const auto h2 = static_cast<std::uint64_t>(p.shape.hidden2);
  auto slice = [&](const std::vector<double>& v, std::size_t from, std::size_t to) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(from),
                               v.begin() + static_cast<std::ptrdiff_t>(to));
  };
  std::vector<NamedArray> arrays = {
      {"trunk.0.weight", {in, h1}, slice(p.weights, L.w1, L.b1)},
      {"trunk.0.bias", {h1}, slice(p.weights, L.b1, L.w2)},
      {"trunk.1.weight", {h1, h2}, slice(p.weights, L.w2, L.b2)},
      {"trunk.1.bias", {h2}, slice(p.weights, L.b2, L.wpi)},
      {"policy.weight", {h2, kNumActions}, slice(p.weights, L.wpi, L.bpi)},
      {"policy.bias", {kNumActions}, slice(p.weights, L.bpi, L.wv)},
      {"value.weight", {h2}, slice(p.weights, L.wv, L.bv)},
      {"value.bias", {1}, slice(p.weights, L.bv, L.total)},
      {"optim.adam_m", {L.total}, p.adam_m},
      {"optim.adam_v", {L.total}, p.adam_v},
      {"meta.update_count", {1}, {static_cast<double>(p.update_count)}},
      {"meta.adam_step", {1}, {static_cast<double>(p.adam_step)}},
  };
  return arrays;
}

}  // namespace

std::string encode_checkpoint(const PolicyParams& params) {
  std::string out(kMagic, sizeof(kMagic));
  const auto arrays = to_arrays(params);
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put_le(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_le(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) put_le(out, d);
    for (double v : a.data) put_le(out, v);
  }
  return out;
}

PolicyParams decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw IoError("not a policy checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedArray> arrays;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 4) throw IoError("array '" + a.name + "' has implausible rank");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      a.dims.push_back(r.get<std::uint64_t>());
      n *= a.dims.back();
    }
    if (n > (1ULL << 28)) throw IoError("array '" + a.name + "' is implausibly large");
    a.data.resize(n);
    for (auto& v : a.data) v = r.get<double>();
    arrays.push_back(std::move(a));
  }
  if (!r.at_end()) throw IoError("trailing bytes after checkpoint arrays");

  auto find = [&](const std::string& name) -> const NamedArray& {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    throw IoError("checkpoint is missing array '" + name + "'");
  };
  const auto& w1 = find("trunk.0.weight");
  const auto& w2 = find("trunk.1.weight");
  if (w1.dims.size() != 2 || w2.dims.size() != 2) throw IoError("bad trunk weight shapes");
  PolicyParams p;
  p.shape = {static_cast<int>(w1.dims[0]), static_cast<int>(w1.dims[1]), static_cast<int>(w2.dims[1])};
  const auto expected = to_arrays(PolicyParams{p.shape, std::vector<double>(ParamLayout(p.shape).total),
                                               0, std::vector<double>(ParamLayout(p.shape).total),
                                               std::vector<double>(ParamLayout(p.shape).total), 0});
  for (const auto& e : expected) {
    const auto& a = find(e.name);
    if (a.dims != e.dims) throw IoError("array '" + e.name + "' has an unexpected shape");
  }
  for (std::size_t k = 0; k < 8; ++k) {
    const auto& a = find(expected[k].name);
    p.weights.insert(p.weights.end(), a.data.begin(), a.data.end());
  }
  p.adam_m = find("optim.adam_m").data;
  p.adam_v = find("optim.adam_v").data;
  p.update_count = static_cast<std::uint64_t>(find("meta.update_count").data[0]);
  p.adam_step = static_cast<std::uint64_t>(find("meta.adam_step").data[0]);
  return p;
}

void save_checkpoint(const PolicyParams& params, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    const std::string bytes = encode_checkpoint(params);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot move checkpoint into place at '" + path + "'");
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_checkpoint(buf.str());
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::uint64_t params_hash(const PolicyParams& params) {
  return fnv1a64(encode_checkpoint(params));
}

}  // namespace ued
