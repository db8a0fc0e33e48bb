#include "condense/nn/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "condense/error.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'N', 'D', 'S', 'C', 'K', 'P', 'T'};

template <class U>
void write_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <class U>
U read_le(std::istream& in, const std::string& path) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("checkpoint '" + path + "' is truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return value;
}

nlohmann::json read_header(std::istream& in, const std::string& path) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("'" + path + "' is not a checkpoint");
  const auto version = read_le<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint '" + path + "' has unsupported version " +
                    std::to_string(version));
  }
  const auto length = read_le<std::uint64_t>(in, path);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw DataError("checkpoint '" + path + "' is truncated");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("checkpoint '" + path + "' metadata: " + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const nlohmann::json& meta) {
  const auto params = store.by_name();
  nlohmann::json header;
  header["params"] = nlohmann::json::array();
  for (const Parameter* p : params) {
    header["params"].push_back(
        {{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  header["meta"] = meta;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const float f = static_cast<float>(p->value[i]);
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, sizeof bits);
      write_le<std::uint32_t>(out, bits);
    }
  }
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

nlohmann::json load_checkpoint(const std::string& path, ParameterStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  const nlohmann::json header = read_header(in, path);
  const auto params = store.by_name();
  const auto& listed = header.at("params");
  if (listed.size() != params.size()) {
    throw DataError("checkpoint '" + path + "' holds " + std::to_string(listed.size()) +
                    " parameters, model has " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& entry = listed[k];
    Parameter& p = *params[k];
    if (entry.at("name").get<std::string>() != p.name ||
        entry.at("rows").get<std::size_t>() != p.value.rows() ||
        entry.at("cols").get<std::size_t>() != p.value.cols()) {
      throw DataError("checkpoint '" + path + "' layout differs at '" + p.name + "'");
    }
  }
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const auto bits = read_le<std::uint32_t>(in, path);
      float f = 0;
      std::memcpy(&f, &bits, sizeof f);
      p->value[i] = static_cast<Real>(f);
    }
  }
  return header.value("meta", nlohmann::json::object());
}

nlohmann::json read_checkpoint_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return read_header(in, path).value("meta", nlohmann::json::object());
}

}  // namespace condense::inline CONDENSE_PRECISION::nn
