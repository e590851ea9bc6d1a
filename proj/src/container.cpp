#include "stsccl/container.hpp"

#include <cstring>
#include <fstream>

#include "stsccl/errors.hpp"

namespace stsccl {

namespace {

void write_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_i64(std::ofstream& out, int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::ifstream& in, const std::string& ctx) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw LoadError("truncated container: " + ctx);
  return v;
}

int64_t read_i64(std::ifstream& in, const std::string& ctx) {
  int64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 8)) throw LoadError("truncated container: " + ctx);
  return v;
}

}  // namespace

NamedArray NamedArray::from_tensor(const std::string& name, const Tensor& t) {
  NamedArray a;
  a.name = name;
  a.shape = t.shape();
  a.f64.assign(t.data(), t.data() + t.numel());
  return a;
}

NamedArray NamedArray::from_i64(const std::string& name, std::vector<int64_t> values) {
  NamedArray a;
  a.name = name;
  a.dtype = 1;
  a.shape = {static_cast<int64_t>(values.size())};
  a.i64 = std::move(values);
  return a;
}

NamedArray NamedArray::from_string(const std::string& name, const std::string& text) {
  NamedArray a;
  a.name = name;
  a.dtype = 1;
  a.shape = {static_cast<int64_t>(text.size())};
  for (unsigned char c : text) a.i64.push_back(c);
  return a;
}

Tensor NamedArray::to_tensor() const {
  if (dtype != 0) throw LoadError("array `" + name + "` is not f64");
  return Tensor(shape, f64);
}

std::string NamedArray::to_string() const {
  std::string s;
  for (int64_t v : i64) s.push_back(static_cast<char>(v));
  return s;
}

void write_container(const std::string& path, const char magic[4], const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open for writing: " + path);
  out.write(magic, 4);
  write_u32(out, 1);
  write_u32(out, static_cast<uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    write_u32(out, static_cast<uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    out.put(static_cast<char>(a.dtype));
    write_u32(out, static_cast<uint32_t>(a.shape.size()));
    for (int64_t d : a.shape) write_i64(out, d);
    if (a.dtype == 0) {
      out.write(reinterpret_cast<const char*>(a.f64.data()),
                static_cast<std::streamsize>(a.f64.size() * sizeof(double)));
    } else {
      out.write(reinterpret_cast<const char*>(a.i64.data()),
                static_cast<std::streamsize>(a.i64.size() * sizeof(int64_t)));
    }
  }
  if (!out) throw LoadError("write failure: " + path);
}

std::vector<NamedArray> read_container(const std::string& path, const char magic[4]) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open: " + path);
  char m[4];
  if (!in.read(m, 4) || std::memcmp(m, magic, 4) != 0) {
    throw LoadError("bad magic in " + path + " (expected " + std::string(magic, 4) + ")");
  }
  uint32_t version = read_u32(in, path);
  if (version != 1) throw LoadError("unsupported container version in " + path);
  uint32_t count = read_u32(in, path);
  std::vector<NamedArray> arrays;
  for (uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    uint32_t nlen = read_u32(in, path);
    a.name.resize(nlen);
    if (!in.read(a.name.data(), nlen)) throw LoadError("truncated name in " + path);
    int c = in.get();
    if (c == EOF) throw LoadError("truncated dtype in " + path);
    a.dtype = static_cast<uint8_t>(c);
    uint32_t ndim = read_u32(in, path);
    int64_t n = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      a.shape.push_back(read_i64(in, path));
      n *= a.shape.back();
    }
    if (a.dtype == 0) {
      a.f64.resize(static_cast<size_t>(n));
      if (!in.read(reinterpret_cast<char*>(a.f64.data()), n * 8)) throw LoadError("truncated data in " + path);
    } else {
      a.i64.resize(static_cast<size_t>(n));
      if (!in.read(reinterpret_cast<char*>(a.i64.data()), n * 8)) throw LoadError("truncated data in " + path);
    }
    arrays.push_back(std::move(a));
  }
  return arrays;
}

const NamedArray* find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const NamedArray& require_array(const std::vector<NamedArray>& arrays, const std::string& name,
                                const std::string& path) {
  const NamedArray* a = find_array(arrays, name);
  if (!a) throw LoadError("missing array `" + name + "` in " + path);
  return *a;
}

}  // namespace stsccl
