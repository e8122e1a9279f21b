#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace deadzone {

std::string sha256_hex(const std::string& bytes);

struct FigureOptions {
  int jobs = 1;
  std::uint64_t seed = 1;
};

struct FigureFile {
  std::string name;
  std::string sha256;
  nlohmann::json config;
};

struct FigureBundle {
  std::string figure;
  std::vector<FigureFile> files;
  std::string manifest_sha256;
  std::size_t failed_rows = 0;
};

/// fig2, fig4, fig5, figS1.
const std::vector<std::string>& figure_ids();

/// Runs the built-in spec of a figure, writes one CSV per panel into `dir`
/// and a manifest.json listing every file with its digest and config.
/// Throws ConfigError for an unknown id.
FigureBundle write_figure(const std::string& id, const std::filesystem::path& dir,
                          const FigureOptions& opts = {});

}  // namespace deadzone
