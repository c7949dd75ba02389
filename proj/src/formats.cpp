// Copyright 2026 The caplab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "caplab/formats.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "caplab/errors.hpp"
#include "caplab/model.hpp"

namespace caplab {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_floats(std::string& out, const num::Tensor& t) {
  const std::size_t start = out.size();
  out.resize(start + 4 * t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float f = static_cast<float>(t[i]);
    std::memcpy(out.data() + start + 4 * i, &f, 4);
  }
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError(origin_ + ": " + what + " at byte offset " +
                      std::to_string(at));
  }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(origin_ + ": truncated " + std::string(what) +
                        " at byte offset " + std::to_string(pos_) +
                        ": expected " + std::to_string(n) + " bytes, found " +
                        std::to_string(remaining()));
    }
  }

  void magic(const char* m) {
    need(4, "magic");
    if (bytes_.compare(pos_, 4, m) != 0) {
      fail("bad magic (expected \"" + std::string(m) + "\")", pos_);
    }
    pos_ += 4;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void floats(num::Tensor& t, const char* what) {
    need(4 * t.size(), what);
    for (std::size_t i = 0; i < t.size(); ++i) {
      float f;
      std::memcpy(&f, bytes_.data() + pos_ + 4 * i, 4);
      t[i] = static_cast<double>(f);
    }
    pos_ += 4 * t.size();
  }

 private:
  const std::string& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw FormatError(std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string encode_features(const num::Tensor& block) {
  if (block.rank() != 2) {
    throw DimensionError("feature block must be a matrix, got " +
                         num::shape_string(block.shape()));
  }
  num::require_finite(block, "feature block");
  std::string out = "FSEQ";
  put_u32(out, kFseqVersion);
  put_u32(out, narrow(block.rows(), "row count"));
  put_u32(out, narrow(block.cols(), "column count"));
  put_floats(out, block);
  return out;
}

num::Tensor decode_features(const std::string& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  r.magic("FSEQ");
  const std::size_t at_version = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kFseqVersion) {
    r.fail("unsupported FSEQ version " + std::to_string(version), at_version);
  }
  const std::size_t at_shape = r.offset();
  const std::uint32_t m = r.u32("row count");
  const std::uint32_t d = r.u32("column count");
  if (m == 0 || d == 0) {
    r.fail("empty shape " + std::to_string(m) + "x" + std::to_string(d), at_shape);
  }
  const std::size_t payload = 4ull * m * d;
  if (r.remaining() != payload) {
    throw FormatError(origin + ": payload at byte offset 16 should hold " +
                      std::to_string(payload) + " bytes for " +
                      std::to_string(m) + "x" + std::to_string(d) +
                      " float32, found " + std::to_string(r.remaining()));
  }
  num::Tensor t({m, d});
  r.floats(t, "payload");
  return t;
}

void save_features(const num::Tensor& block, const std::filesystem::path& path) {
  write_file(path, encode_features(block));
}

num::Tensor load_features(const std::filesystem::path& path) {
  return decode_features(read_file(path), path.string());
}

std::string encode_checkpoint(const CheckpointData& data) {
  std::string out = "CKPT";
  put_u32(out, kCkptVersion);
  put_u32(out, narrow(data.tensors.size(), "tensor count"));
  for (const auto& [name, t] : data.tensors) {
    num::require_finite(t, "checkpoint tensor " + name);
    put_u32(out, narrow(name.size(), "name length"));
    out += name;
    put_u32(out, narrow(t.rank(), "rank"));
    for (std::size_t e : t.shape()) put_u32(out, narrow(e, "extent"));
    put_floats(out, t);
  }
  const std::string meta = data.meta.dump();
  put_u32(out, narrow(meta.size(), "meta length"));
  out += meta;
  return out;
}

CheckpointData decode_checkpoint(const std::string& bytes,
                                 const std::string& origin) {
  Reader r(bytes, origin);
  r.magic("CKPT");
  const std::size_t at_version = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kCkptVersion) {
    r.fail("unsupported CKPT version " + std::to_string(version), at_version);
  }
  const std::uint32_t count = r.u32("tensor count");
  CheckpointData data;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at_record = r.offset();
    const std::uint32_t name_len = r.u32("name length");
    std::string name = r.text(name_len, "tensor name");
    const std::uint32_t rank = r.u32("rank");
    if (rank == 0 || rank > 4) {
      r.fail("tensor " + name + " has rank " + std::to_string(rank),
             r.offset() - 4);
    }
    num::Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.u32("extent"));
    num::Tensor t(shape);
    r.floats(t, "tensor payload");
    if (!data.tensors.emplace(std::move(name), std::move(t)).second) {
      r.fail("duplicate tensor name", at_record);
    }
  }
  const std::uint32_t meta_len = r.u32("meta length");
  const std::size_t at_meta = r.offset();
  const std::string meta = r.text(meta_len, "meta block");
  if (r.remaining() != 0) {
    r.fail(std::to_string(r.remaining()) + " trailing bytes", r.offset());
  }
  try {
    data.meta = Json::parse(meta);
  } catch (const Json::exception& e) {
    r.fail(std::string("meta block is not JSON (") + e.what() + ")", at_meta);
  }
  return data;
}

void save_checkpoint(const CaptionModel& model, const Json& extra,
                     const std::filesystem::path& path) {
  CheckpointData data;
  data.tensors = model.snapshot();
  Json meta = extra.is_null() ? Json::object() : extra;
  meta["config"] = model.config().to_json();
  meta["config_hash"] = model.config().hash();
  meta["vocab"] = model.vocab().to_json();
  meta["vocab_hash"] = model.vocab().hash();
  data.meta = std::move(meta);
  write_file(path, encode_checkpoint(data));
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

std::unique_ptr<CaptionModel> model_from_checkpoint(const CheckpointData& data) {
  if (!data.meta.contains("config") || !data.meta.contains("vocab")) {
    throw FormatError("checkpoint meta lacks config or vocab");
  }
  const ModelConfig config = ModelConfig::from_json(data.meta.at("config"));
  Vocabulary vocab = Vocabulary::from_json(data.meta.at("vocab"));
  if (data.meta.contains("config_hash") &&
      data.meta.at("config_hash").get<std::string>() != config.hash()) {
    throw ContractError("checkpoint config_hash does not match its config");
  }
  auto model = std::make_unique<CaptionModel>(config, std::move(vocab), 0);
  std::vector<std::string> missing, extra;
  for (const auto& [name, _] : model->params().all()) {
    if (!data.tensors.count(name)) missing.push_back(name);
  }
  for (const auto& [name, _] : data.tensors) {
    if (!model->params().contains(name)) extra.push_back(name);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "checkpoint tensors do not match the model:";
    for (const auto& n : missing) msg += " missing " + n + ";";
    for (const auto& n : extra) msg += " unexpected " + n + ";";
    throw ContractError(msg);
  }
  model->restore(data.tensors);
  return model;
}

std::unique_ptr<CaptionModel> load_model(const std::filesystem::path& path) {
  return model_from_checkpoint(load_checkpoint(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LookupError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw LookupError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_file(path, j.dump(2) + "\n");
}

}  // namespace caplab
