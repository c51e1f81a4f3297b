#include "lucid/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "lucid/errors.hpp"

namespace lucid {

namespace {

constexpr char kMagic[8] = {'L', 'U', 'C', 'I', 'D', 'K', 'P', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError(std::string("checkpoint: truncated ") + what);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const char* what) {
  auto len = get<std::uint32_t>(in, what);
  if (len > (1u << 24)) {
    throw ParseError(std::string("checkpoint: implausible string size in ") +
                     what);
  }
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw ParseError(std::string("checkpoint: truncated ") + what);
  return s;
}

}  // namespace

void write_checkpoint(const std::string& path,
                      const std::vector<NamedBuffer>& buffers,
                      const std::map<std::string, std::string>& strings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open " + path + " for write");
  out.write(kMagic, sizeof(kMagic));

  put<std::uint32_t>(out, static_cast<std::uint32_t>(buffers.size()));
  for (const NamedBuffer& b : buffers) {
    if (b.data.size() != ad::numel(b.shape)) {
      throw ContractError("checkpoint: buffer '" + b.name +
                          "' does not match its shape");
    }
    put_string(out, b.name);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(b.shape.size()));
    for (std::size_t d : b.shape) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(b.data.data()),
              static_cast<std::streamsize>(b.data.size() * sizeof(double)));
  }

  put<std::uint32_t>(out, static_cast<std::uint32_t>(strings.size()));
  for (const auto& [k, v] : strings) {
    put_string(out, k);
    put_string(out, v);
  }
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

void read_checkpoint(const std::string& path,
                     std::vector<NamedBuffer>& buffers,
                     std::map<std::string, std::string>& strings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("checkpoint: bad magic in " + path);
  }

  buffers.clear();
  strings.clear();
  // counts and dims are untrusted until the reads behind them succeed, so
  // never pre-allocate from them and multiply dims with an overflow guard
  auto n = get<std::uint32_t>(in, "buffer count");
  for (std::uint32_t i = 0; i < n; ++i) {
    NamedBuffer b;
    b.name = get_string(in, "buffer name");
    auto ndim = get<std::uint8_t>(in, "ndim");
    for (std::uint8_t d = 0; d < ndim; ++d)
      b.shape.push_back(get<std::uint64_t>(in, "dim"));
    constexpr std::size_t kMaxElems = 1ull << 32;
    std::size_t count = 1;
    for (std::size_t d : b.shape) {
      if (d != 0 && count > kMaxElems / d) {
        throw ParseError("checkpoint: implausible buffer size for " + b.name);
      }
      count *= d;
    }
    b.data.resize(count);
    in.read(reinterpret_cast<char*>(b.data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ParseError("checkpoint: truncated data for " + b.name);
    buffers.push_back(std::move(b));
  }

  auto ns = get<std::uint32_t>(in, "string count");
  for (std::uint32_t i = 0; i < ns; ++i) {
    std::string k = get_string(in, "string key");
    strings[k] = get_string(in, "string value");
  }
}

}  // namespace lucid
