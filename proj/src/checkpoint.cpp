#include "maverick/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace maverick {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace {

constexpr char kMagic[4] = {'M', 'V', 'R', 'K'};
constexpr unsigned char kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  check(in.good(), "checkpoint: truncated stream");
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelParams<float>& params,
                     const std::string& config_json) {
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  for (const auto& [name, m] : params.tensors) {
    check(!name.empty(), "checkpoint: empty parameter name");
    const Tensor t = to_tensor(m);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  put_u32(out, 0);  // end of records
  put_u32(out, static_cast<std::uint32_t>(config_json.size()));
  out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  check(out.good(), "checkpoint: write failure");
}

void save_checkpoint_file(const std::string& path, const ModelParams<float>& params,
                          const std::string& config_json) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "checkpoint: cannot open " + path + " for writing");
  save_checkpoint(out, params, config_json);
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  check(in.good() && std::memcmp(magic, kMagic, 4) == 0, "checkpoint: bad magic");
  const int version = in.get();
  check(version != std::istream::traits_type::eof(), "checkpoint: truncated stream");
  check(version == kVersion,
        "checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ck;
  while (true) {
    const std::uint32_t name_len = get_u32(in);
    if (name_len == 0) break;
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    check(in.good(), "checkpoint: truncated stream");

    Tensor t;
    const std::uint32_t rank = get_u32(in);
    check(rank <= 8, "checkpoint: implausible tensor rank");
    for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(get_u32(in));
    const std::size_t count = t.element_count();
    check(count <= (1u << 28), "checkpoint: implausible tensor size");
    t.data.resize(count);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    check(in.good(), "checkpoint: truncated stream");
    ck.params.add(name, from_tensor<float>(t));
  }
  const std::uint32_t cfg_len = get_u32(in);
  ck.config_json.resize(cfg_len);
  if (cfg_len > 0) {
    in.read(ck.config_json.data(), cfg_len);
    check(in.good(), "checkpoint: truncated stream");
  }
  return ck;
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace maverick
