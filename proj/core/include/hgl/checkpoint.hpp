#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "hgl/parameter_store.hpp"

namespace hgl {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint layout:
///
///   HGLCKPT 1
///   meta <key> <value...>                 zero or more
///   param <name> <rank> <d0> .. <offset>  one per parameter, name order
///   data <bytes>
///   <raw little-endian float64 payload>
///
/// Offsets count bytes from the first payload byte.
struct Checkpoint {
  ParameterStore params;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params,
                     const std::map<std::string, std::string>& meta = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies values from `source` into `target`; names and shapes must match.
void assign_parameters(ParameterStore& target, const ParameterStore& source);

}  // namespace hgl
