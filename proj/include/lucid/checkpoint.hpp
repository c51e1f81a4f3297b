#pragma once

// Flat binary checkpoint container: named double buffers with shapes plus
// a string table. Little-endian, fixed magic, no varints. Values round
// trip bit for bit, which resume correctness depends on.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lucid/tensor.hpp"

namespace lucid {

struct NamedBuffer {
  std::string name;
  ad::Shape shape;
  std::vector<double> data;
};

void write_checkpoint(const std::string& path,
                      const std::vector<NamedBuffer>& buffers,
                      const std::map<std::string, std::string>& strings);

void read_checkpoint(const std::string& path,
                     std::vector<NamedBuffer>& buffers,
                     std::map<std::string, std::string>& strings);

}  // namespace lucid
