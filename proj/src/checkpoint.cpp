#include "dalign/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "dalign/error.hpp"

namespace dalign::nn {
namespace {

using json = nlohmann::json;

constexpr std::string_view kFormat = "dalign-microformer";
constexpr int kVersion = 1;

std::string to_hex(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
  return out;
}

std::uint64_t from_hex(const std::string& s) {
  if (s.size() != 16) throw ValidationError("checkpoint: vocab_hash must be 16 hex digits");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw ValidationError("checkpoint: vocab_hash must be lowercase hex");
  }
  return v;
}

void append_le(std::string& out, double value) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i, bits >>= 8) out.push_back(static_cast<char>(bits & 0xff));
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string serialize_checkpoint(const ModelParams& params, const CheckpointHeader& header) {
  const Dims& d = params.dims;
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["dims"] = {{"vocab", d.vocab}, {"d_model", d.d_model}, {"heads", d.heads},
                 {"layers", d.layers}, {"d_ff", d.d_ff},     {"max_len", d.max_len}};
  doc["specials"] = {
      {"bos", params.specials.bos}, {"eos", params.specials.eos}, {"pad", params.specials.pad}};
  doc["seed"] = header.seed;
  doc["vocab_hash"] = to_hex(header.vocab_hash);
  json arrays = json::array();
  params.for_each_array([&arrays](std::string_view name, const Matrix& m) {
    arrays.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  doc["arrays"] = std::move(arrays);

  std::string out = doc.dump();
  out.push_back('\n');
  out.reserve(out.size() + params.parameter_count() * 8);
  params.for_each_array([&out](std::string_view, const Matrix& m) {
    for (double v : m.flat()) append_le(out, v);
  });
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw ValidationError("checkpoint: missing header line");
  json doc;
  try {
    doc = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    if (doc.at("format") != kFormat || doc.at("version") != kVersion) {
      throw ValidationError("checkpoint: unsupported format or version");
    }
    const json& jd = doc.at("dims");
    Dims dims;
    dims.vocab = jd.at("vocab").get<std::size_t>();
    dims.d_model = jd.at("d_model").get<std::size_t>();
    dims.heads = jd.at("heads").get<std::size_t>();
    dims.layers = jd.at("layers").get<std::size_t>();
    dims.d_ff = jd.at("d_ff").get<std::size_t>();
    dims.max_len = jd.at("max_len").get<std::size_t>();
    const json& js = doc.at("specials");
    tok::SpecialIds specials{js.at("bos").get<tok::TokenId>(), js.at("eos").get<tok::TokenId>(),
                             js.at("pad").get<tok::TokenId>()};
    ck.header.seed = doc.at("seed").get<std::uint64_t>();
    ck.header.vocab_hash = from_hex(doc.at("vocab_hash").get<std::string>());
    ck.params = ModelParams::zeros(dims, specials);
    if (specials.bos >= dims.vocab || specials.eos >= dims.vocab || specials.pad >= dims.vocab) {
      throw ValidationError("checkpoint: special ids outside the vocabulary");
    }

    const json& arrays = doc.at("arrays");
    std::size_t index = 0;
    std::size_t offset = nl + 1;
    ck.params.for_each_array([&](std::string_view name, Matrix& m) {
      if (index >= arrays.size()) throw ValidationError("checkpoint: too few arrays declared");
      const json& a = arrays[index++];
      if (a.at("name") != name || a.at("rows") != m.rows() || a.at("cols") != m.cols()) {
        throw ValidationError("checkpoint: array '" + std::string(name) +
                              "' missing or with unexpected shape");
      }
      if (bytes.size() < offset + m.size() * 8) throw ValidationError("checkpoint: truncated data");
      for (double& v : m.flat()) {
        v = read_le(bytes.data() + offset);
        offset += 8;
      }
    });
    if (index != arrays.size()) throw ValidationError("checkpoint: unexpected extra arrays");
    if (offset != bytes.size()) throw ValidationError("checkpoint: trailing bytes after data");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const CheckpointHeader& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(params, header);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace dalign::nn
