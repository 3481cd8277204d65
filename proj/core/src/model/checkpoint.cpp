#include "lencon/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace lencon {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& data, std::size_t pos, std::string path)
      : data_(data), pos_(pos), path_(std::move(path)) {}

  bool done() const { return pos_ == data_.size(); }

  std::uint64_t take(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(path_ + ": truncated file");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += n;
    return v;
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  double f64() { return std::bit_cast<double>(take(8)); }

  std::string bytes(std::size_t n) {
    if (data_.size() - pos_ < n) throw CheckpointError(path_ + ": truncated file");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& data_;
  std::size_t pos_;
  std::string path_;
};

std::size_t parse_size(const TensorFile& file, const std::string& key,
                       const std::string& path) {
  const auto v = file.get(key);
  if (!v) throw CheckpointError(path + ": header missing '" + key + "'");
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(*v, &used);
    if (used != v->size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw CheckpointError(path + ": header value " + key + "=" + *v +
                          " is not a number");
  }
}

}  // namespace

std::optional<std::string> TensorFile::get(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  std::string out(kCheckpointMagic);
  for (std::size_t i = 0; i < file.header.size(); ++i) {
    if (i) out += ' ';
    out += file.header[i].first + "=" + file.header[i].second;
  }
  out += '\n';
  for (const auto& rec : file.records) {
    put_u32(out, static_cast<std::uint32_t>(rec.name.size()));
    out += rec.name;
    put_u32(out, static_cast<std::uint32_t>(rec.value.rank()));
    for (std::size_t d : rec.value.dims()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : rec.value.values()) put_f64(out, v);
  }
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) throw CheckpointError("cannot write " + path.string());
  stream.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!stream) throw CheckpointError("failed writing " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw CheckpointError("cannot read " + path.string());
  const std::string data((std::istreambuf_iterator<char>(stream)),
                         std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (data.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0) {
    throw CheckpointError(where + ": bad magic, not a checkpoint file");
  }
  const auto eol = data.find('\n', kCheckpointMagic.size());
  if (eol == std::string::npos) throw CheckpointError(where + ": truncated header");

  TensorFile file;
  std::istringstream header(data.substr(kCheckpointMagic.size(),
                                        eol - kCheckpointMagic.size()));
  std::string item;
  while (header >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CheckpointError(where + ": malformed header entry '" + item + "'");
    }
    file.header.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }

  Reader reader(data, eol + 1, where);
  while (!reader.done()) {
    TensorRecord rec;
    rec.name = reader.bytes(reader.u32());
    const std::uint32_t rank = reader.u32();
    if (rank > 8) throw CheckpointError(where + ": implausible rank for " + rec.name);
    Shape dims(rank);
    for (auto& d : dims) d = reader.u32();
    std::vector<double> values(shape_size(dims));
    for (double& v : values) v = reader.f64();
    rec.value = Tensor(std::move(dims), std::move(values));
    file.records.push_back(std::move(rec));
  }
  return file;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const ModelConfig& c = params.config();
  TensorFile file;
  file.header = {
      {"variant", std::string(variant_name(c.variant))},
      {"E", std::to_string(c.embed_dim)},
      {"H", std::to_string(c.hidden_dim)},
      {"D_len", std::to_string(c.len_embed_dim)},
      {"L_types", std::to_string(c.length_types)},
      {"V_src", std::to_string(c.src_vocab)},
      {"V_tgt", std::to_string(c.tgt_vocab)},
  };
  for (const Parameter* p : params.parameters()) {
    file.records.push_back({p->name, p->value});
  }
  write_tensor_file(path, file);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  const std::string where = path.string();
  const TensorFile file = read_tensor_file(path);
  ModelConfig config;
  const auto variant = file.get("variant");
  if (!variant) throw CheckpointError(where + ": header missing 'variant'");
  try {
    config.variant = parse_variant(*variant);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(where + ": " + e.what());
  }
  config.embed_dim = parse_size(file, "E", where);
  config.hidden_dim = parse_size(file, "H", where);
  config.len_embed_dim = parse_size(file, "D_len", where);
  config.length_types = parse_size(file, "L_types", where);
  config.src_vocab = parse_size(file, "V_src", where);
  config.tgt_vocab = parse_size(file, "V_tgt", where);

  std::optional<ModelParams> params;
  try {
    params.emplace(config);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(where + ": " + e.what());
  }
  const auto expected = params->parameters();
  if (file.records.size() < expected.size()) {
    throw CheckpointError(where + ": truncated file, " +
                          std::to_string(file.records.size()) + " of " +
                          std::to_string(expected.size()) + " tensors present");
  }
  if (file.records.size() > expected.size()) {
    throw CheckpointError(where + ": unexpected extra tensors");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const TensorRecord& rec = file.records[i];
    Parameter* p = expected[i];
    if (rec.name != p->name) {
      throw CheckpointError(where + ": expected tensor '" + p->name + "', found '" +
                            rec.name + "'");
    }
    if (rec.value.dims() != p->value.dims()) {
      throw CheckpointError(where + ": tensor '" + p->name + "' has shape " +
                            shape_string(rec.value.dims()) + " but header implies " +
                            shape_string(p->value.dims()));
    }
    p->value = rec.value;
    p->zero_grad();
  }
  return std::move(*params);
}

ModelParams load_checkpoint(const std::filesystem::path& path, Variant expected) {
  ModelParams params = load_checkpoint(path);
  if (params.variant() != expected) {
    throw CheckpointError(path.string() + ": variant mismatch, checkpoint is " +
                          std::string(variant_name(params.variant())) +
                          " but " + std::string(variant_name(expected)) +
                          " was requested");
  }
  return params;
}

}  // namespace lencon
