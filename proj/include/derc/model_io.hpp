#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "derc/dataset.hpp"
#include "derc/error.hpp"
#include "derc/neural.hpp"
#include "derc/text.hpp"

// Versioned single-file model container.
//
// Layout (little endian):
//   "DERCMODL"            8-byte magic
//   u32 version
//   u32 section count
//   per section: u32 name length, name, u8 kind (0 matrix, 1 string),
//                matrix: u64 rows, u64 cols, rows*cols f64 row-major
//                string: u64 length, bytes
//   u64 FNV-1a checksum of every preceding byte
namespace derc {

inline constexpr char kModelMagic[8] = {'D', 'E', 'R', 'C', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Everything a pipeline stage needs to resume: network weights, optional
/// centroids, and free-form string metadata (model kind, config echo).
struct ModelBundle {
  nn::NetworkParams params;
  std::optional<Matrix> centroids;
  std::map<std::string, std::string> metadata;
};

namespace detail {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    buf_.append(bytes, sizeof(T));
  }
  void put_name(std::string_view name) {
    put(static_cast<std::uint32_t>(name.size()));
    buf_.append(name);
  }
  void matrix(std::string_view name, const Matrix& m) {
    put_name(name);
    put(std::uint8_t{0});
    put(static_cast<std::uint64_t>(m.rows()));
    put(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) put(m(i, j));
    ++sections_;
  }
  void string(std::string_view name, std::string_view value) {
    put_name(name);
    put(std::uint8_t{1});
    put(static_cast<std::uint64_t>(value.size()));
    buf_.append(value);
    ++sections_;
  }
  [[nodiscard]] std::uint32_t sections() const { return sections_; }
  [[nodiscard]] const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
  std::uint32_t sections_ = 0;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError("model file is truncated (needed " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos_) + ")");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline void write_layers(Writer& w, const std::string& prefix, const std::vector<nn::DenseLayer>& layers) {
  w.string(prefix + "/count", std::to_string(layers.size()));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto base = prefix + "/" + std::to_string(i);
    w.matrix(base + "/weights", layers[i].weights);
    w.matrix(base + "/bias", layers[i].bias);
    w.string(base + "/activation", nn::to_string(layers[i].activation));
  }
}

struct Sections {
  std::map<std::string, Matrix> matrices;
  std::map<std::string, std::string> strings;

  const Matrix& matrix(const std::string& name) const {
    const auto it = matrices.find(name);
    if (it == matrices.end()) throw FormatError("model file lacks section " + name);
    return it->second;
  }
  const std::string& string(const std::string& name) const {
    const auto it = strings.find(name);
    if (it == strings.end()) throw FormatError("model file lacks section " + name);
    return it->second;
  }
};

inline nn::DenseLayer read_layer(const Sections& s, const std::string& base) {
  nn::DenseLayer layer;
  layer.weights = s.matrix(base + "/weights");
  const Matrix& b = s.matrix(base + "/bias");
  if (b.cols() != 1 || b.rows() != layer.weights.rows())
    throw FormatError("bias shape mismatch in " + base);
  layer.bias = b.col(0);
  layer.activation = nn::activation_from_string(s.string(base + "/activation"));
  return layer;
}

inline std::vector<nn::DenseLayer> read_layers(const Sections& s, const std::string& prefix) {
  const auto count = std::stoul(s.string(prefix + "/count"));
  std::vector<nn::DenseLayer> layers;
  for (std::size_t i = 0; i < count; ++i) layers.push_back(read_layer(s, prefix + "/" + std::to_string(i)));
  for (std::size_t i = 1; i < layers.size(); ++i)
    if (layers[i].fan_in() != layers[i - 1].fan_out())
      throw FormatError("layer shapes do not chain in " + prefix);
  return layers;
}

}  // namespace detail

inline std::string serialize_model(const ModelBundle& model) {
  detail::Writer body;
  for (const auto& [k, v] : model.metadata) body.string("meta/" + k, v);
  detail::write_layers(body, "encoder", model.params.encoder);
  detail::write_layers(body, "decoder", model.params.decoder);
  if (model.params.log_var_head) {
    body.matrix("log_var_head/weights", model.params.log_var_head->weights);
    body.matrix("log_var_head/bias", model.params.log_var_head->bias);
    body.string("log_var_head/activation", nn::to_string(model.params.log_var_head->activation));
  }
  if (model.centroids) body.matrix("centroids", *model.centroids);

  detail::Writer head;
  for (char c : kModelMagic) head.put(c);
  head.put(kModelVersion);
  head.put(body.sections());
  std::string out = head.bytes() + body.bytes();
  detail::Writer tail;
  tail.put(text::fnv1a(out));
  return out + tail.bytes();
}

inline ModelBundle deserialize_model(std::string_view bytes) {
  detail::Reader r(bytes);
  if (bytes.size() < sizeof kModelMagic || std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0)
    throw FormatError("not a model file (bad magic bytes)");
  r.take(sizeof kModelMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion)
    throw FormatError("model file version " + std::to_string(version) +
                      " is not supported (this build reads version " +
                      std::to_string(kModelVersion) + ")");
  const auto count = r.get<std::uint32_t>();
  detail::Sections s;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name(r.take(name_len));
    const auto kind = r.get<std::uint8_t>();
    if (kind == 0) {
      const auto rows = r.get<std::uint64_t>();
      const auto cols = r.get<std::uint64_t>();
      if (cols != 0 && rows > (bytes.size() / 8) / cols)
        throw FormatError("model file is truncated (section " + name + ")");
      Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (Eigen::Index a = 0; a < m.rows(); ++a)
        for (Eigen::Index b = 0; b < m.cols(); ++b) m(a, b) = r.get<double>();
      s.matrices.emplace(std::move(name), std::move(m));
    } else if (kind == 1) {
      const auto len = r.get<std::uint64_t>();
      s.strings.emplace(std::move(name), std::string(r.take(len)));
    } else {
      throw FormatError("unknown section kind " + std::to_string(kind) + " in " + name);
    }
  }
  const std::size_t body_end = r.pos();
  const auto checksum = r.get<std::uint64_t>();
  if (checksum != text::fnv1a(bytes.substr(0, body_end)))
    throw FormatError("model file checksum mismatch (corrupted or truncated)");
  if (r.pos() != bytes.size()) throw FormatError("trailing bytes after model checksum");

  ModelBundle model;
  for (const auto& [name, value] : s.strings)
    if (name.rfind("meta/", 0) == 0) model.metadata[name.substr(5)] = value;
  model.params.encoder = detail::read_layers(s, "encoder");
  model.params.decoder = detail::read_layers(s, "decoder");
  if (model.params.encoder.empty() || model.params.decoder.empty())
    throw FormatError("model file has an empty encoder or decoder");
  if (model.params.encoder.back().fan_out() != model.params.decoder.front().fan_in())
    throw FormatError("encoder output does not match decoder input");
  if (s.matrices.count("log_var_head/weights")) model.params.log_var_head = detail::read_layer(s, "log_var_head");
  if (s.matrices.count("centroids")) model.centroids = s.matrix("centroids");
  return model;
}

inline void save_model(const ModelBundle& model, const std::string& path) {
  text::write_file(path, serialize_model(model));
}

inline ModelBundle load_model(const std::string& path) {
  return deserialize_model(text::read_file(path));
}

}  // namespace derc
