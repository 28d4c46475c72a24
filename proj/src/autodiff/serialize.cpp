#include "timecf/autodiff/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "timecf/error.hpp"

namespace timecf::ad {

namespace {

constexpr char kMagic[4] = {'T', 'C', 'F', '1'};

template <typename U>
void put_le(std::ostream& os, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
bool get_le(std::istream& is, U& v) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return true;
}

[[noreturn]] void truncated(const std::string& what) { throw ParseError("truncated parameter file while reading " + what, 0); }

}  // namespace

void write_tensors(std::ostream& os, const NamedTensors& tensors) {
  os.write(kMagic, 4);
  for (const auto& [name, t] : tensors) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(os, d);
    for (double v : t.data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
}

NamedTensors read_tensors(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("not a TCF1 parameter file", 0);
  NamedTensors out;
  while (true) {
    std::uint32_t name_len = 0;
    if (!get_le(is, name_len)) {
      if (is.eof() && is.gcount() == 0) break;
      truncated("name length");
    }
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) truncated("tensor name");
    std::uint32_t rank = 0;
    if (!get_le(is, rank) || rank == 0 || rank > 8) truncated("rank of " + name);
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint64_t v = 0;
      if (!get_le(is, v) || v == 0) truncated("dims of " + name);
      d = static_cast<std::size_t>(v);
    }
    std::vector<double> data(numel(shape));
    for (auto& x : data) {
      std::uint64_t bits = 0;
      if (!get_le(is, bits)) truncated("payload of " + name);
      x = std::bit_cast<double>(bits);
    }
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_tensors(os, tensors);
  if (!os) throw InputError("failed writing " + path.string());
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path.string(), 0);
  return read_tensors(is);
}

}  // namespace timecf::ad
