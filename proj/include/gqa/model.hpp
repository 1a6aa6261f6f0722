#ifndef GQA_MODEL_HPP
#define GQA_MODEL_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/nn.hpp"
#include "gqa/rng.hpp"

namespace gqa {

/// Network layout. Four shared per-point blocks (3 -> 64 -> 128 -> 256 ->
/// 512, each followed by ReLU and a per-patch max pool), a concatenated
/// multi-scale feature, and two sigmoid-headed MLPs (feature -> 512 -> 256
/// -> 64 -> 1) predicting the patch quality index and the patch weight.
///
/// `blocks_in_feature` selects which pooled block outputs enter the
/// concatenated feature (the cascade always runs in full); the head fan-in
/// follows the selection. The default selects all four, giving a
/// 64+128+256+512 = 960 dimensional feature.
struct ArchConfig {
  static constexpr int kInputDim = 3;
  static constexpr std::array<int, 4> kBlockDims = {64, 128, 256, 512};
  static constexpr std::array<int, 3> kHeadHidden = {512, 256, 64};

  std::array<bool, 4> blocks_in_feature = {true, true, true, true};

  int feature_dim() const {
    int d = 0;
    for (int b = 0; b < 4; ++b) {
      if (blocks_in_feature[b]) d += kBlockDims[b];
    }
    return d;
  }

  bool any_block() const {
    return blocks_in_feature[0] || blocks_in_feature[1] || blocks_in_feature[2] ||
           blocks_in_feature[3];
  }
};

/// All trainable parameters: 4 shared blocks + 2 head MLPs of 4 layers each.
/// Also reused as the container shape for gradients and Adam moments.
struct ModelParams {
  ArchConfig arch;
  std::vector<DenseLayer> blocks;  // 4 layers
  std::vector<DenseLayer> head_s;  // 4 layers, quality index head
  std::vector<DenseLayer> head_w;  // 4 layers, patch weight head
};

namespace detail {

inline std::vector<DenseLayer> make_head(int in_dim, Rng& rng) {
  std::vector<DenseLayer> head;
  int d = in_dim;
  for (int h : ArchConfig::kHeadHidden) {
    head.push_back(make_dense(h, d, rng));
    d = h;
  }
  head.push_back(make_dense(1, d, rng));
  return head;
}

inline std::vector<DenseLayer> zero_layers(const std::vector<DenseLayer>& src) {
  std::vector<DenseLayer> out;
  out.reserve(src.size());
  for (const auto& l : src) out.push_back(zeros_like(l));
  return out;
}

}  // namespace detail

/// Fresh parameters with seeded fan-in uniform init.
inline ModelParams init_model(std::uint64_t seed, ArchConfig arch = {}) {
  if (!arch.any_block()) throw DataError("block subset must be non-empty");
  Rng rng(seed);
  ModelParams p;
  p.arch = arch;
  int d = ArchConfig::kInputDim;
  for (int b = 0; b < 4; ++b) {
    p.blocks.push_back(make_dense(ArchConfig::kBlockDims[b], d, rng));
    d = ArchConfig::kBlockDims[b];
  }
  p.head_s = detail::make_head(arch.feature_dim(), rng);
  p.head_w = detail::make_head(arch.feature_dim(), rng);
  return p;
}

inline ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.arch = p.arch;
  z.blocks = detail::zero_layers(p.blocks);
  z.head_s = detail::zero_layers(p.head_s);
  z.head_w = detail::zero_layers(p.head_w);
  return z;
}

/// Visits every layer of one or more structurally identical parameter sets,
/// in serialization order, with a diagnostic name.
template <class Fn>
void for_each_layer(ModelParams& p, Fn&& fn) {
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    fn("blocks[" + std::to_string(i) + "]", p.blocks[i]);
  }
  for (std::size_t i = 0; i < p.head_s.size(); ++i) {
    fn("head_s[" + std::to_string(i) + "]", p.head_s[i]);
  }
  for (std::size_t i = 0; i < p.head_w.size(); ++i) {
    fn("head_w[" + std::to_string(i) + "]", p.head_w[i]);
  }
}

template <class Fn>
void for_each_layer(const ModelParams& p, Fn&& fn) {
  for_each_layer(const_cast<ModelParams&>(p),
                 [&](const std::string& name, DenseLayer& l) {
                   fn(name, static_cast<const DenseLayer&>(l));
                 });
}

inline bool all_finite(const ModelParams& p) {
  bool ok = true;
  for_each_layer(p, [&](const std::string&, const DenseLayer& l) {
    ok = ok && l.weight.allFinite() && l.bias.allFinite();
  });
  return ok;
}

/// Adam state mirroring the parameter layout.
struct AdamState {
  ModelParams m;
  ModelParams v;
  long long step = 0;
  AdamConfig config;

  static AdamState for_model(const ModelParams& p, AdamConfig cfg = {}) {
    AdamState st;
    st.m = zeros_like(p);
    st.v = zeros_like(p);
    st.config = cfg;
    return st;
  }
};

/// One Adam step over all parameters. Throws NumericError, naming the
/// offending block, when a gradient is non-finite.
inline void adam_step(ModelParams& params, const ModelParams& grads,
                      AdamState& state, double lr) {
  for_each_layer(grads, [&](const std::string& name, const DenseLayer& g) {
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw NumericError("non-finite gradient in " + name);
    }
  });
  state.step += 1;
  auto update_group = [&](std::vector<DenseLayer>& p,
                          const std::vector<DenseLayer>& g,
                          std::vector<DenseLayer>& m, std::vector<DenseLayer>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      adam_update(p[i].weight, g[i].weight, m[i].weight, v[i].weight,
                  state.config, lr, state.step);
      adam_update(p[i].bias, g[i].bias, m[i].bias, v[i].bias, state.config, lr,
                  state.step);
    }
  };
  update_group(params.blocks, grads.blocks, state.m.blocks, state.v.blocks);
  update_group(params.head_s, grads.head_s, state.m.head_s, state.v.head_s);
  update_group(params.head_w, grads.head_w, state.m.head_w, state.v.head_w);
}

// ---------------------------------------------------------------------------
// Weights file: magic "GQAN", then little-endian u32 format version (1),
// u32 layer count, and per layer u32 rows, u32 cols, rows*cols f64 row-major
// weights, rows f64 biases. Layer order: blocks[0..3], head_s[0..3],
// head_w[0..3]. Doubles are raw IEEE-754 bit patterns: save/load round-trips
// are lossless.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string origin)
      : data_(std::move(data)), origin_(std::move(origin)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw ParseError(origin_ + ": truncated weights file");
    }
  }

  std::string data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr char kWeightsMagic[] = "GQAN";
inline constexpr std::uint32_t kWeightsVersion = 1;

inline void save_model(const std::filesystem::path& path, const ModelParams& p) {
  std::string out;
  out += kWeightsMagic;
  detail::put_u32(out, kWeightsVersion);
  std::uint32_t count = 0;
  for_each_layer(p, [&](const std::string&, const DenseLayer&) { ++count; });
  detail::put_u32(out, count);
  for_each_layer(p, [&](const std::string&, const DenseLayer& l) {
    detail::put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        detail::put_f64(out, l.weight(r, c));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) detail::put_f64(out, l.bias[r]);
  });
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed for '" + path.string() + "'");
}

inline ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  detail::ByteReader in(std::move(data), path.string());
  if (in.bytes(4) != kWeightsMagic) {
    throw ParseError(path.string() + ": bad magic (not a weights file)");
  }
  const std::uint32_t version = in.u32();
  if (version != kWeightsVersion) {
    throw ParseError(path.string() + ": unsupported format version " +
                     std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  if (count != 12) {
    throw ParseError(path.string() + ": expected 12 layers, found " +
                     std::to_string(count));
  }
  std::vector<DenseLayer> layers;
  layers.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
      throw ParseError(path.string() + ": implausible layer shape");
    }
    DenseLayer l;
    l.weight.resize(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) l.weight(r, c) = in.f64();
    }
    l.bias.resize(rows);
    for (std::uint32_t r = 0; r < rows; ++r) l.bias[r] = in.f64();
    layers.push_back(std::move(l));
  }
  if (!in.exhausted()) {
    throw ParseError(path.string() + ": trailing bytes after last layer");
  }

  ModelParams p;
  p.blocks.assign(layers.begin(), layers.begin() + 4);
  p.head_s.assign(layers.begin() + 4, layers.begin() + 8);
  p.head_w.assign(layers.begin() + 8, layers.end());

  // Validate the block cascade and recover the feature selection from the
  // head fan-in (block dims are distinct, so subset sums are unique).
  int d = ArchConfig::kInputDim;
  for (int b = 0; b < 4; ++b) {
    if (p.blocks[b].in_dim() != d ||
        p.blocks[b].out_dim() != ArchConfig::kBlockDims[b]) {
      throw ParseError(path.string() + ": block " + std::to_string(b) +
                       " has unexpected shape");
    }
    d = ArchConfig::kBlockDims[b];
  }
  int head_in = p.head_s[0].in_dim();
  if (p.head_w[0].in_dim() != head_in) {
    throw ParseError(path.string() + ": head fan-ins disagree");
  }
  ArchConfig arch;
  int remaining = head_in;
  for (int b = 3; b >= 0; --b) {
    if (remaining >= ArchConfig::kBlockDims[b]) {
      arch.blocks_in_feature[b] = true;
      remaining -= ArchConfig::kBlockDims[b];
    } else {
      arch.blocks_in_feature[b] = false;
    }
  }
  if (remaining != 0) {
    throw ParseError(path.string() + ": head fan-in " + std::to_string(head_in) +
                     " is not a sum of block widths");
  }
  for (const auto* head : {&p.head_s, &p.head_w}) {
    int hd = head_in;
    for (std::size_t i = 0; i < ArchConfig::kHeadHidden.size(); ++i) {
      if ((*head)[i].in_dim() != hd ||
          (*head)[i].out_dim() != ArchConfig::kHeadHidden[i]) {
        throw ParseError(path.string() + ": head layer " + std::to_string(i) +
                         " has unexpected shape");
      }
      hd = ArchConfig::kHeadHidden[i];
    }
    if (head->back().in_dim() != hd || head->back().out_dim() != 1) {
      throw ParseError(path.string() + ": head output layer has unexpected shape");
    }
  }
  p.arch = arch;
  return p;
}

}  // namespace gqa

#endif  // GQA_MODEL_HPP
