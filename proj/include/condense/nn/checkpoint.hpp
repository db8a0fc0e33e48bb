#pragma once

#include <string>

#include "condense/nn/graph.hpp"
#include "json.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

/// Binary checkpoint layout:
///   8 bytes   magic "CNDSCKPT"
///   u32 LE    format version
///   u64 LE    metadata length, then that many bytes of UTF-8 JSON:
///             {"params": [{"name", "rows", "cols"}...], "meta": {...}}
///   f32 LE    parameter values, parameters in name order, row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const nlohmann::json& meta);

/// Loads values into a store with the same names and shapes and returns the
/// "meta" block. Any layout difference raises DataError.
nlohmann::json load_checkpoint(const std::string& path, ParameterStore& store);

/// Reads only the "meta" block.
nlohmann::json read_checkpoint_meta(const std::string& path);

}  // namespace condense::inline CONDENSE_PRECISION::nn
