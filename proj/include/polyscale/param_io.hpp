#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "polyscale/estimate.hpp"
#include "polyscale/models.hpp"

namespace polyscale {

/// JSON parameter file:
///   {"format": "polyscale-params", "version": 1, "model": "nrm",
///    "prior": {"mean": 0, "sd": 1}, "scale_note": "...",
///    "layout_checksum": "<fnv1a-64 hex>",
///    "items": [{"id": "Q40a", "categories": [1, 2, 3, 4], ...}]}
/// Item fields: GRM "a", "d"; GGUM "a", "d", "tau"; NRM "a", "c" plus the
/// derived (informational) "d". Doubles are written in shortest round-trip form.
std::string export_params(const ItemBank& bank);
std::string export_params(const FitResult& fit);

/// Parses and validates a parameter file. When `expected` is given, a
/// different model is an error.
ItemBank import_params(const std::string& text, std::optional<ModelKind> expected = std::nullopt);

ItemBank load_params(const std::filesystem::path& path, std::optional<ModelKind> expected = std::nullopt);
void save_params(const std::filesystem::path& path, const ItemBank& bank);

/// FNV-1a 64 over the model name, item ids and category codes.
std::string layout_checksum(const ItemBank& bank);

}  // namespace polyscale
