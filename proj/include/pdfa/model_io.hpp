#pragma once

#include <filesystem>
#include <string>

#include "pdfa/core.hpp"

namespace pdfa {

inline constexpr const char* kModelSchema = "pdfa-model/1";

/// {"schema", "alphabet_size", "root", "states": [{id, final_prob,
/// transitions: [{symbol, target|null, prob}]}]}
std::string model_to_json(const PdfaView& model, int indent = 2);
/// Throws std::runtime_error on a wrong schema tag or malformed document,
/// StructuralError when the automaton itself is invalid.
PdfaView model_from_json(const std::string& text);
std::string model_to_dot(const PdfaView& model);

void save_model(const std::filesystem::path& path, const PdfaView& model);
PdfaView load_model(const std::filesystem::path& path);

}  // namespace pdfa
