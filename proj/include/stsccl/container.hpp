#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stsccl/tensor.hpp"

namespace stsccl {

// One named array inside the binary container format:
// magic(4) version(u32) count(u32), then per array
//   name_len(u32) name dtype(u8: 0=f64, 1=i64) ndim(u32) dims(i64...) payload
struct NamedArray {
  std::string name;
  uint8_t dtype = 0;  // 0 = f64, 1 = i64
  Shape shape;
  std::vector<double> f64;
  std::vector<int64_t> i64;

  static NamedArray from_tensor(const std::string& name, const Tensor& t);
  static NamedArray from_i64(const std::string& name, std::vector<int64_t> values);
  static NamedArray from_string(const std::string& name, const std::string& text);
  Tensor to_tensor() const;
  std::string to_string() const;
};

void write_container(const std::string& path, const char magic[4], const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_container(const std::string& path, const char magic[4]);

const NamedArray* find_array(const std::vector<NamedArray>& arrays, const std::string& name);
const NamedArray& require_array(const std::vector<NamedArray>& arrays, const std::string& name,
                                const std::string& path);

}  // namespace stsccl
