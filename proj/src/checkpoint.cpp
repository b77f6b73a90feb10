// Copyright 2026 The softmar Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mar/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include "mar/error.hpp"

namespace mar {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::string_view kEncoderMagic = "MARENC01";
constexpr std::string_view kAgentMagic = "MARAGT01";

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_f64(std::string& out, std::span<const double> values) {
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
}

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  void expect_magic(std::string_view magic) {
    if (take(magic.size()) != magic) fail("bad magic");
  }

  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }

  void f64(std::span<double> out) {
    const auto raw = take(out.size() * sizeof(double));
    std::memcpy(out.data(), raw.data(), raw.size());
  }

  void expect_end() {
    if (pos_ != bytes_.size()) fail("trailing bytes");
  }

 private:
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) fail("truncated at byte " + std::to_string(pos_));
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail(const std::string& why) {
    throw Error(ErrorCode::kMalformedFile, std::string(what_) + ": " + why);
  }

  std::string_view bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename onto " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string encode_encoder(const EncoderParams& params) {
  std::string out(kEncoderMagic);
  put_u32(out, params.shape.d_in);
  put_u32(out, params.shape.d_h);
  put_u32(out, params.shape.d_out);
  put_u32(out, params.shape.depth);
  for (auto t : params.tensors()) put_f64(out, t);
  return out;
}

EncoderParams decode_encoder(std::string_view bytes) {
  Reader r(bytes, "encoder checkpoint");
  r.expect_magic(kEncoderMagic);
  EncoderShape shape;
  shape.d_in = r.u32();
  shape.d_h = r.u32();
  shape.d_out = r.u32();
  shape.depth = r.u32();
  const std::uint64_t last_in = shape.depth == 2 ? shape.d_h : shape.d_in;
  std::uint64_t scalars = std::uint64_t{shape.d_out} * (last_in + 1);
  if (shape.depth == 2) scalars += std::uint64_t{shape.d_h} * (shape.d_in + 1);
  if (bytes.size() != kEncoderMagic.size() + 16 + scalars * sizeof(double)) {
    throw Error(ErrorCode::kMalformedFile, "encoder checkpoint size does not match its header");
  }
  EncoderParams params;
  try {
    params = EncoderParams::zeros(shape);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("encoder checkpoint: ") + e.what());
  }
  for (auto t : params.tensors()) r.f64(t);
  r.expect_end();
  if (!params.all_finite()) {
    throw Error(ErrorCode::kMalformedFile, "encoder checkpoint has non-finite entries");
  }
  return params;
}

void save_encoder(const std::filesystem::path& path, const EncoderParams& params) {
  write_file_atomic(path, encode_encoder(params));
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  return decode_encoder(read_file(path));
}

std::string encode_agents(const AgentBank& agents) {
  std::string out(kAgentMagic);
  put_u32(out, static_cast<std::uint32_t>(agents.vectors.rows()));
  put_u32(out, static_cast<std::uint32_t>(agents.vectors.cols()));
  put_f64(out, {agents.vectors.data(), static_cast<std::size_t>(agents.vectors.size())});
  return out;
}

AgentBank decode_agents(std::string_view bytes, bool constrained) {
  Reader r(bytes, "agent checkpoint");
  r.expect_magic(kAgentMagic);
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  if (bytes.size() != kAgentMagic.size() + 8 + std::uint64_t{count} * dim * sizeof(double)) {
    throw Error(ErrorCode::kMalformedFile, "agent checkpoint size does not match its header");
  }
  AgentBank bank;
  bank.constrained = constrained;
  bank.vectors = Mat::Zero(count, dim);
  r.f64({bank.vectors.data(), static_cast<std::size_t>(bank.vectors.size())});
  r.expect_end();
  return bank;
}

void save_agents(const std::filesystem::path& path, const AgentBank& agents) {
  write_file_atomic(path, encode_agents(agents));
}

AgentBank load_agents(const std::filesystem::path& path, bool constrained) {
  return decode_agents(read_file(path), constrained);
}

}  // namespace mar
