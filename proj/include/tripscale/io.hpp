#pragma once

#include "tripscale/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace tripscale::io {

inline constexpr const char* kResponseHeader =
    "ref,opt1,opt2,answer,rt_ms,session_id,repeat_index";

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Parses the response CSV. A header row is required; only ref, opt1, opt2 and
/// answer are mandatory columns. When `stimuli` is given, the stimulus columns
/// hold labels mapped through it, otherwise 0-based indices.
Responses read_responses(std::istream& in, const StimulusSet* stimuli = nullptr);
Responses read_responses_file(const std::filesystem::path& path,
                              const StimulusSet* stimuli = nullptr);

void write_responses(std::ostream& out, const Responses& responses);

/// Slant-from-texture raw layout: stimulus columns hold slant in degrees
/// (0, 10, ..., 70), mapped onto indices 0..7.
StimulusSet slant_stimuli();

nlohmann::json to_json(const Embedding& e);
Embedding embedding_from_json(const nlohmann::json& j);

/// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace tripscale::io
