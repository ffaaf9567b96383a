// Copyright 2026 The hs-assist Authors
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

// Binary model artifact (.hsx). All integers are little-endian u64 unless
// noted, reals are IEEE-754 binary64 stored little-endian, strings are a u32
// byte length followed by UTF-8 bytes.
//
//   magic          "HSXAI1" (6 bytes)
//   format         u32 (= 1)
//   version        string
//   dim, |V|, C    u64 x 3
//   vocabulary     min_count, then |V| x (token string, count)
//   idf            n_docs, oov_weight (f64), |V| x f64
//   embeddings     |V| x dim f64, row-major
//   head           dim x C f64, row-major
//   labels         C x string
//   temperature    f64
//   config         dim, epochs, learning_rate (f64), batch_size, seed, min_count

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "hsassist/encoder.hpp"
#include "hsassist/errors.hpp"

namespace hsassist {

inline constexpr char kModelMagic[6] = {'H', 'S', 'X', 'A', 'I', '1'};
inline constexpr std::uint32_t kModelFormat = 1;

namespace detail {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  template <typename T>
  void le(T v) {
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, sizeof(T));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string str() {
    auto n = u32();
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw ModelFormatError("truncated model artifact");
  }
  /// Guards allocation sizes read from the file.
  std::uint64_t count(std::uint64_t limit = std::uint64_t{1} << 32) {
    auto n = u64();
    if (n > limit) throw ModelFormatError("implausible size in model header");
    return n;
  }

 private:
  template <typename T>
  T le() {
    unsigned char buf[sizeof(T)];
    read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

/// Bytes left in a seekable stream, nullopt otherwise.
inline std::optional<std::uint64_t> remaining(std::istream& in) {
  const auto here = in.tellg();
  if (here < 0) return std::nullopt;
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  in.seekg(here);
  if (end < here) return std::nullopt;
  return static_cast<std::uint64_t>(end - here);
}

}  // namespace detail

inline void save_model(std::ostream& out, const ModelArtifact& m) {
  m.validate();
  detail::Writer w(out);
  w.raw(kModelMagic, sizeof kModelMagic);
  w.u32(kModelFormat);
  w.str(m.version);
  w.u64(m.dim());
  w.u64(m.vocab.size());
  w.u64(m.num_classes());

  w.u64(m.vocab.min_count());
  for (std::size_t i = 0; i < m.vocab.size(); ++i) {
    w.str(m.vocab.token(static_cast<TokenId>(i)));
    w.u64(m.vocab.count(static_cast<TokenId>(i)));
  }
  w.u64(m.idf.n_docs);
  w.f64(m.idf.oov_weight);
  for (double x : m.idf.weights) w.f64(x);
  for (double x : m.token_embeddings.data()) w.f64(x);
  for (double x : m.head.data()) w.f64(x);
  for (const auto& l : m.labels) w.str(l.digits());
  w.f64(m.temperature);

  const auto& c = m.config;
  w.u64(c.dim);
  w.u64(c.epochs);
  w.f64(c.learning_rate);
  w.u64(c.batch_size);
  w.u64(c.seed);
  w.u64(c.min_count);
  if (!out) throw IoError("failed writing model artifact");
}

inline ModelArtifact load_model(std::istream& in) {
  detail::Reader r(in);
  char magic[sizeof kModelMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kModelMagic, sizeof magic) != 0) throw ModelFormatError("not an HSXAI1 model artifact");
  if (auto format = r.u32(); format != kModelFormat)
    throw ModelFormatError("unsupported model format " + std::to_string(format));

  ModelArtifact m;
  m.version = r.str();
  const auto dim = r.count(1 << 20);
  const auto n_vocab = r.count();
  const auto n_labels = r.count();
  if (auto left = detail::remaining(in)) {
    // every embedding and head entry takes 8 bytes; reject headers that
    // promise more data than the stream holds before allocating for it
    const long double need = 8.0L * dim * (static_cast<long double>(n_vocab) + n_labels);
    if (need > static_cast<long double>(*left)) throw ModelFormatError("truncated model artifact");
  }

  const auto min_count = r.u64();
  std::vector<Token> tokens(n_vocab);
  std::vector<std::uint64_t> counts(n_vocab);
  for (std::uint64_t i = 0; i < n_vocab; ++i) {
    tokens[i] = r.str();
    counts[i] = r.u64();
  }
  m.vocab = Vocabulary(std::move(tokens), std::move(counts), min_count);
  m.idf.n_docs = r.u64();
  m.idf.oov_weight = r.f64();
  m.idf.weights.resize(n_vocab);
  for (double& x : m.idf.weights) x = r.f64();
  m.token_embeddings = Matrix(n_vocab, dim);
  for (double& x : m.token_embeddings.data()) x = r.f64();
  m.head = Matrix(dim, n_labels);
  for (double& x : m.head.data()) x = r.f64();
  for (std::uint64_t i = 0; i < n_labels; ++i) {
    auto code = HsCode::try_parse(r.str());
    if (!code || code->level() != HsLevel::subheading) throw ModelFormatError("bad label in model artifact");
    m.labels.push_back(*code);
  }
  m.temperature = r.f64();

  auto& c = m.config;
  c.dim = r.u64();
  c.epochs = r.u64();
  c.learning_rate = r.f64();
  c.batch_size = r.u64();
  c.seed = r.u64();
  c.min_count = r.u64();
  if (in.peek() != std::char_traits<char>::eof()) throw ModelFormatError("trailing bytes after model artifact");
  m.validate();
  return m;
}

inline void save_model(const std::filesystem::path& path, const ModelArtifact& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  save_model(out, m);
}

inline ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_model(in);
}

inline std::string serialize_model(const ModelArtifact& m) {
  std::ostringstream out(std::ios::binary);
  save_model(out, m);
  return std::move(out).str();
}

}  // namespace hsassist
