#pragma once

// In-memory form of the subset of an ONNX ModelProto that a forward-only
// CNN classifier needs: graph topology, initializers, attributes, and the
// declared input/output shapes.

#include "camkit/errors.hpp"
#include "camkit/inference/onnx/protobuf.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace camkit::onnx {

enum class DataType : int {
  Undefined = 0,
  Float = 1,
  Uint8 = 2,
  Int8 = 3,
  Int32 = 6,
  Int64 = 7,
  Bool = 9,
  Double = 11,
};

/// A dense value flowing through the graph. Float payloads live in
/// `floats`; integer and boolean payloads (shape arithmetic) in `ints`.
struct Value {
  std::vector<std::int64_t> shape;
  bool integer = false;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;

  std::size_t count() const {
    std::size_t n = 1;
    for (auto d : shape)
      n *= static_cast<std::size_t>(d);
    return n;
  }
};

struct Attribute {
  std::string name;
  std::optional<float> f;
  std::optional<std::int64_t> i;
  std::optional<std::string> s;
  std::optional<Value> t;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
};

struct Node {
  std::string name;
  std::string op_type;
  std::string domain;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Attribute> attributes;

  const Attribute *attr(const std::string &key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? nullptr : &it->second;
  }
  std::int64_t attr_int(const std::string &key, std::int64_t fallback) const {
    const auto *a = attr(key);
    return a && a->i ? *a->i : fallback;
  }
  float attr_float(const std::string &key, float fallback) const {
    const auto *a = attr(key);
    return a && a->f ? *a->f : fallback;
  }
  std::string attr_string(const std::string &key,
                          const std::string &fallback) const {
    const auto *a = attr(key);
    return a && a->s ? *a->s : fallback;
  }
  std::vector<std::int64_t> attr_ints(const std::string &key) const {
    const auto *a = attr(key);
    return a ? a->ints : std::vector<std::int64_t>{};
  }
};

struct Dimension {
  std::optional<std::int64_t> value; // empty for symbolic dims
  std::string param;
};

struct ValueInfo {
  std::string name;
  int elem_type = 0;
  std::vector<Dimension> dims;
};

struct Graph {
  std::string name;
  std::vector<Node> nodes;
  std::map<std::string, Value> initializers;
  std::vector<ValueInfo> inputs;
  std::vector<ValueInfo> outputs;
};

struct Model {
  std::int64_t ir_version = 0;
  std::map<std::string, std::int64_t> opsets; // domain -> version
  Graph graph;

  std::int64_t default_opset() const {
    for (const char *d : {"", "ai.onnx"}) {
      auto it = opsets.find(d);
      if (it != opsets.end())
        return it->second;
    }
    return 0;
  }
};

namespace detail {

inline std::span<const std::uint8_t> bytes_of(const pb::Field &f) {
  if (f.type != pb::WireType::LengthDelimited)
    throw ModelLoadError("ONNX: expected embedded message for field " +
                         std::to_string(f.number));
  return f.bytes;
}

template <typename Int, std::size_t N>
Int load_le(const std::uint8_t *p) {
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < N; ++b)
    v |= std::uint64_t(p[b]) << (8 * b);
  return static_cast<Int>(v);
}

inline Value parse_tensor(std::span<const std::uint8_t> bytes,
                          std::string *name_out = nullptr) {
  Value v;
  int data_type = 0;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
  std::span<const std::uint8_t> raw;
  bool has_raw = false;
  pb::Reader r(bytes);
  pb::Field f;
  while (r.next(f)) {
    switch (f.number) {
    case 1:
      pb::append_int64s(f, v.shape);
      break;
    case 2:
      data_type = static_cast<int>(f.varint);
      break;
    case 4:
      pb::append_floats(f, floats);
      break;
    case 5:
    case 7:
      pb::append_int64s(f, ints);
      break;
    case 8:
      if (name_out)
        *name_out = f.as_string();
      break;
    case 9:
      raw = f.bytes;
      has_raw = true;
      break;
    case 10:
      pb::append_doubles(f, floats);
      break;
    case 14:
      if (f.varint != 0)
        throw ModelLoadError("ONNX: externally stored tensors are not supported");
      break;
    default:
      break;
    }
  }
  const std::size_t n = v.count();
  switch (static_cast<DataType>(data_type)) {
  case DataType::Float:
  case DataType::Double:
    v.integer = false;
    if (has_raw) {
      const std::size_t width = data_type == int(DataType::Float) ? 4 : 8;
      if (raw.size() != n * width)
        throw ModelLoadError("ONNX: raw tensor payload size mismatch");
      v.floats.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        v.floats[i] =
            width == 4
                ? std::bit_cast<float>(load_le<std::uint32_t, 4>(&raw[4 * i]))
                : static_cast<float>(std::bit_cast<double>(
                      load_le<std::uint64_t, 8>(&raw[8 * i])));
    } else {
      v.floats = std::move(floats);
    }
    if (v.floats.size() != n)
      throw ModelLoadError("ONNX: float tensor holds " +
                           std::to_string(v.floats.size()) + " values, shape needs " +
                           std::to_string(n));
    break;
  case DataType::Int64:
  case DataType::Int32:
  case DataType::Int8:
  case DataType::Uint8:
  case DataType::Bool: {
    v.integer = true;
    if (has_raw) {
      std::size_t width = 1;
      if (data_type == int(DataType::Int64))
        width = 8;
      else if (data_type == int(DataType::Int32))
        width = 4;
      if (raw.size() != n * width)
        throw ModelLoadError("ONNX: raw tensor payload size mismatch");
      v.ints.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto *p = &raw[width * i];
        if (width == 8)
          v.ints[i] = load_le<std::int64_t, 8>(p);
        else if (width == 4)
          v.ints[i] = static_cast<std::int32_t>(load_le<std::uint32_t, 4>(p));
        else if (data_type == int(DataType::Int8))
          v.ints[i] = static_cast<std::int8_t>(*p);
        else
          v.ints[i] = *p;
      }
    } else {
      v.ints = std::move(ints);
    }
    if (v.ints.size() != n)
      throw ModelLoadError("ONNX: integer tensor element count mismatch");
    break;
  }
  default:
    throw ModelLoadError("ONNX: unsupported tensor data type " +
                         std::to_string(data_type));
  }
  return v;
}

inline Attribute parse_attribute(std::span<const std::uint8_t> bytes) {
  Attribute a;
  pb::Reader r(bytes);
  pb::Field f;
  while (r.next(f)) {
    switch (f.number) {
    case 1:
      a.name = f.as_string();
      break;
    case 2:
      a.f = f.as_float();
      break;
    case 3:
      a.i = f.as_int64();
      break;
    case 4:
      a.s = f.as_string();
      break;
    case 5:
      a.t = parse_tensor(bytes_of(f));
      break;
    case 7:
      pb::append_floats(f, a.floats);
      break;
    case 8:
      pb::append_int64s(f, a.ints);
      break;
    default:
      break;
    }
  }
  return a;
}

inline Node parse_node(std::span<const std::uint8_t> bytes) {
  Node n;
  pb::Reader r(bytes);
  pb::Field f;
  while (r.next(f)) {
    switch (f.number) {
    case 1:
      n.inputs.push_back(f.as_string());
      break;
    case 2:
      n.outputs.push_back(f.as_string());
      break;
    case 3:
      n.name = f.as_string();
      break;
    case 4:
      n.op_type = f.as_string();
      break;
    case 5: {
      Attribute a = parse_attribute(bytes_of(f));
      n.attributes[a.name] = std::move(a);
      break;
    }
    case 7:
      n.domain = f.as_string();
      break;
    default:
      break;
    }
  }
  return n;
}

inline ValueInfo parse_value_info(std::span<const std::uint8_t> bytes) {
  ValueInfo vi;
  pb::Reader r(bytes);
  pb::Field f;
  while (r.next(f)) {
    if (f.number == 1) {
      vi.name = f.as_string();
    } else if (f.number == 2) {
      pb::Reader type_reader(bytes_of(f));
      pb::Field tf;
      while (type_reader.next(tf)) {
        if (tf.number != 1)
          continue; // only tensor types
        pb::Reader tensor_type(bytes_of(tf));
        pb::Field ttf;
        while (tensor_type.next(ttf)) {
          if (ttf.number == 1) {
            vi.elem_type = static_cast<int>(ttf.varint);
          } else if (ttf.number == 2) {
            pb::Reader shape(bytes_of(ttf));
            pb::Field sf;
            while (shape.next(sf)) {
              if (sf.number != 1)
                continue;
              Dimension d;
              pb::Reader dim(bytes_of(sf));
              pb::Field df;
              while (dim.next(df)) {
                if (df.number == 1)
                  d.value = df.as_int64();
                else if (df.number == 2)
                  d.param = df.as_string();
              }
              vi.dims.push_back(std::move(d));
            }
          }
        }
      }
    }
  }
  return vi;
}

inline Graph parse_graph(std::span<const std::uint8_t> bytes) {
  Graph g;
  pb::Reader r(bytes);
  pb::Field f;
  while (r.next(f)) {
    switch (f.number) {
    case 1:
      g.nodes.push_back(parse_node(bytes_of(f)));
      break;
    case 2:
      g.name = f.as_string();
      break;
    case 5: {
      std::string name;
      Value v = parse_tensor(bytes_of(f), &name);
      g.initializers[name] = std::move(v);
      break;
    }
    case 11:
      g.inputs.push_back(parse_value_info(bytes_of(f)));
      break;
    case 12:
      g.outputs.push_back(parse_value_info(bytes_of(f)));
      break;
    default:
      break;
    }
  }
  return g;
}

} // namespace detail

inline Model parse_model(std::span<const std::uint8_t> bytes) {
  Model m;
  bool has_graph = false;
  pb::Reader r(bytes);
  pb::Field f;
  while (r.next(f)) {
    switch (f.number) {
    case 1:
      m.ir_version = f.as_int64();
      break;
    case 7:
      m.graph = detail::parse_graph(detail::bytes_of(f));
      has_graph = true;
      break;
    case 8: {
      std::string domain;
      std::int64_t version = 0;
      pb::Reader op(detail::bytes_of(f));
      pb::Field of;
      while (op.next(of)) {
        if (of.number == 1)
          domain = of.as_string();
        else if (of.number == 2)
          version = of.as_int64();
      }
      m.opsets[domain] = version;
      break;
    }
    default:
      break;
    }
  }
  if (!has_graph)
    throw ModelLoadError("ONNX: model has no graph");
  return m;
}

inline Model load_model(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ModelLoadError("cannot open model graph " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.empty())
    throw ModelLoadError("model graph " + path.string() + " is empty");
  try {
    return parse_model(bytes);
  } catch (const ModelLoadError &e) {
    throw ModelLoadError(path.string() + ": " + e.what());
  }
}

} // namespace camkit::onnx
