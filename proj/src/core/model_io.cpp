// Copyright 2026 The hsfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hsfuse/classifiers.hpp"
#include "hsfuse/error.hpp"

namespace hsf {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr char kMagic[4] = {'H', 'S', 'F', 'M'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  // Element count, bounded by what the remaining bytes could hold.
  std::size_t count(std::size_t elem_bytes) {
    const auto n = u64();
    if (elem_bytes > 0 && n > (in_.size() - pos_) / elem_bytes) throw DataError("model file is truncated");
    return static_cast<std::size_t>(n);
  }
  Matrix matrix() {
    const auto r = u64(), c = u64();
    if (c != 0 && r > (in_.size() - pos_) / 8 / c) throw DataError("model file is truncated");
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }
  void bytes(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("model file is truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_svm(Writer& w, const SvmModel& m) {
  w.f64(m.c);
  w.f64(m.gamma);
  w.i32(m.classes);
  w.f64(m.cv_accuracy);
  w.matrix(m.support);
  w.u64(m.machines.size());
  for (const auto& mc : m.machines) {
    w.i32(mc.positive);
    w.i32(mc.negative);
    w.f64(mc.rho);
    w.u64(mc.iterations);
    w.u32(mc.converged ? 1 : 0);
    w.u64(mc.index.size());
    for (std::size_t t = 0; t < mc.index.size(); ++t) {
      w.u32(mc.index[t]);
      w.f64(mc.coef[t]);
    }
  }
}

SvmModel read_svm(Reader& r) {
  SvmModel m;
  m.c = r.f64();
  m.gamma = r.f64();
  m.classes = r.i32();
  m.cv_accuracy = r.f64();
  m.support = r.matrix();
  const auto machines = r.count(40);
  for (std::size_t i = 0; i < machines; ++i) {
    SvmMachine mc;
    mc.positive = r.i32();
    mc.negative = r.i32();
    mc.rho = r.f64();
    mc.iterations = r.u64();
    mc.converged = r.u32() != 0;
    const auto n = r.count(12);
    for (std::size_t t = 0; t < n; ++t) {
      mc.index.push_back(r.u32());
      mc.coef.push_back(r.f64());
      if (mc.index.back() >= static_cast<std::uint32_t>(m.support.rows()))
        throw DataError("model file has a support index out of range");
    }
    if (mc.positive < 1 || mc.negative > m.classes) throw DataError("model file has a class id out of range");
    m.machines.push_back(std::move(mc));
  }
  return m;
}

void write_forest(Writer& w, const ForestModel& m) {
  w.i32(m.classes);
  w.u64(m.dims);
  w.u64(m.trees.size());
  for (const auto& t : m.trees) {
    w.u64(t.seed);
    w.u64(t.nodes.size());
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.u32(n.left);
      w.u32(n.right);
      w.i32(n.label);
    }
  }
}

ForestModel read_forest(Reader& r) {
  ForestModel m;
  m.classes = r.i32();
  m.dims = static_cast<std::size_t>(r.u64());
  const auto trees = r.count(16);
  m.trees.resize(trees);
  for (auto& t : m.trees) {
    t.seed = r.u64();
    t.nodes.resize(r.count(24));
    for (auto& n : t.nodes) {
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.u32();
      n.right = r.u32();
      n.label = r.i32();
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      // Children always follow their parent, which rules out cycles.
      if (n.feature >= 0 && (static_cast<std::size_t>(n.feature) >= m.dims || n.left <= i || n.right <= i ||
                             n.left >= t.nodes.size() || n.right >= t.nodes.size()))
        throw DataError("model file has a malformed tree");
    }
    if (t.nodes.empty()) throw DataError("model file has an empty tree");
  }
  return m;
}

void write_rbfnn(Writer& w, const RbfnnModel& m) {
  w.i32(m.classes);
  w.matrix(m.centers);
  for (std::size_t i = 0; i < m.widths.size(); ++i) {
    w.f64(m.widths[i]);
    w.i32(m.center_class[i]);
  }
  Matrix weights = m.weights;
  w.matrix(weights);
}

RbfnnModel read_rbfnn(Reader& r) {
  RbfnnModel m;
  m.classes = r.i32();
  m.centers = r.matrix();
  for (Eigen::Index i = 0; i < m.centers.rows(); ++i) {
    m.widths.push_back(r.f64());
    m.center_class.push_back(r.i32());
    if (!(m.widths.back() > 0.0)) throw DataError("model file has a non-positive width");
  }
  m.weights = r.matrix();
  if (m.weights.rows() != m.centers.rows() + 1 || m.weights.cols() != m.classes)
    throw DataError("model file has inconsistent output weights");
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ClassifierModel& model) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model_kind(model)));
  if (const auto* s = std::get_if<SvmModel>(&model)) write_svm(w, *s);
  if (const auto* f = std::get_if<ForestModel>(&model)) write_forest(w, *f);
  if (const auto* n = std::get_if<RbfnnModel>(&model)) write_rbfnn(w, *n);
  return w.take();
}

ClassifierModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a model file (bad magic)");
  const auto version = r.u32();
  if (version != kVersion) throw DataError("unsupported model file version " + std::to_string(version));
  const auto tag = r.u32();
  ClassifierModel model;
  switch (tag) {
    case 1: model = read_svm(r); break;
    case 2: model = read_forest(r); break;
    case 3: model = read_rbfnn(r); break;
    default: throw DataError("unknown classifier tag " + std::to_string(tag));
  }
  if (!r.done()) throw DataError("model file has trailing bytes");
  return model;
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace hsf
