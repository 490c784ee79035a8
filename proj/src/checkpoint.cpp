#include "fdan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "fdan/config_io.hpp"

namespace fdan {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'A', 'N'};

void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_f32(std::ostream& os, const float* data, std::int64_t n) {
  static_assert(sizeof(float) == 4);
  for (std::int64_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, data + i, 4);
    put_u32(os, bits);
  }
}

struct Reader {
  std::ifstream in;
  std::string where;

  void read(char* dst, std::streamsize n, const std::string& what) {
    in.read(dst, n);
    if (in.gcount() != n)
      throw FormatError(where + ": truncated while reading " + what);
  }
  std::uint16_t u16(const std::string& what) {
    unsigned char b[2];
    read(reinterpret_cast<char*>(b), 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32(const std::string& what) {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
};

}  // namespace

void write_container(const std::filesystem::path& path,
                     const std::string& json_text,
                     const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(kMagic, 4);
  put_u16(os, kContainerVersion);
  put_u32(os, static_cast<std::uint32_t>(json_text.size()));
  os.write(json_text.data(), static_cast<std::streamsize>(json_text.size()));
  for (const auto& t : tensors) {
    put_u16(os, static_cast<std::uint16_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    os.put(4);  // rank
    const Shape s = t.value.shape();
    put_u32(os, static_cast<std::uint32_t>(s.n));
    put_u32(os, static_cast<std::uint32_t>(s.c));
    put_u32(os, static_cast<std::uint32_t>(s.h));
    put_u32(os, static_cast<std::uint32_t>(s.w));
    put_f32(os, t.value.data(), t.value.size());
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<std::string, std::vector<NamedTensor>> read_container(
    const std::filesystem::path& path) {
  Reader r{std::ifstream(path, std::ios::binary), path.string()};
  if (!r.in) throw IoError("cannot open '" + path.string() + "'");

  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path.string() + ": bad magic, not a model container");
  const std::uint16_t version = r.u16("version");
  if (version != kContainerVersion)
    throw FormatError(path.string() + ": unsupported container version " +
                      std::to_string(version));
  const std::uint32_t json_len = r.u32("config length");
  std::string json_text(json_len, '\0');
  r.read(json_text.data(), json_len, "config blob");

  std::vector<NamedTensor> tensors;
  while (true) {
    r.in.peek();
    if (r.in.eof()) break;
    const std::uint16_t name_len = r.u16("tensor name length");
    std::string name(name_len, '\0');
    r.read(name.data(), name_len, "tensor name");
    unsigned char rank;
    r.read(reinterpret_cast<char*>(&rank), 1, "rank of '" + name + "'");
    if (rank != 4)
      throw FormatError(path.string() + ": tensor '" + name +
                        "' has unsupported rank " + std::to_string(rank));
    std::uint32_t dims[4];
    for (auto& d : dims) d = r.u32("dims of '" + name + "'");
    const Shape shape{static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                      static_cast<int>(dims[2]), static_cast<int>(dims[3])};
    const std::int64_t n = shape.elems();
    std::vector<float> data(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const std::uint32_t bits = r.u32("payload of '" + name + "'");
      float f;
      std::memcpy(&f, &bits, 4);
      data[static_cast<std::size_t>(i)] = f;
    }
    tensors.push_back(NamedTensor{std::move(name), Tensor(shape, std::move(data))});
  }
  return {std::move(json_text), std::move(tensors)};
}

void save_checkpoint(const std::filesystem::path& path, const FdanConfig& config,
                     const ParamStore& params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(static_cast<std::size_t>(params.size()));
  for (const auto& p : params) tensors.push_back(NamedTensor{p.name, p.value});
  write_container(path, config_to_text(config), tensors);
}

namespace {

void fill_params(const std::filesystem::path& path,
                 const std::vector<NamedTensor>& tensors, ParamStore& params) {
  if (static_cast<int>(tensors.size()) != params.size())
    throw FormatError(path.string() + ": expected " +
                      std::to_string(params.size()) + " tensors, found " +
                      std::to_string(tensors.size()));
  for (int i = 0; i < params.size(); ++i) {
    const NamedTensor& t = tensors[static_cast<std::size_t>(i)];
    Param& p = params.at(i);
    if (t.name != p.name)
      throw FormatError(path.string() + ": tensor '" + t.name +
                        "' where '" + p.name + "' was expected");
    if (t.value.shape() != p.value.shape())
      throw FormatError(path.string() + ": tensor '" + t.name + "' has shape " +
                        to_string(t.value.shape()) + ", model expects " +
                        to_string(p.value.shape()));
    p.value = t.value;
  }
}

}  // namespace

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  auto [json_text, tensors] = read_container(path);
  const FdanConfig config = config_from_text(json_text);
  auto [net, params] = build_fdan(config);
  fill_params(path, tensors, params);
  return LoadedModel{std::move(net), std::move(params)};
}

void load_checkpoint_into(const std::filesystem::path& path,
                          const FdanConfig& expect, ParamStore& params) {
  auto [json_text, tensors] = read_container(path);
  const FdanConfig got = config_from_text(json_text);
  if (got.channels != expect.channels || got.blocks != expect.blocks ||
      got.groups != expect.groups || got.scale != expect.scale ||
      got.aggregate != expect.aggregate)
    throw ConfigError(path.string() + ": checkpoint config " + config_to_text(got) +
                      " does not match model " + config_to_text(expect));
  fill_params(path, tensors, params);
}

}  // namespace fdan
