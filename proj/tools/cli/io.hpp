#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace kacq::cli {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes to `path.tmp` then renames over `path`; parent directories are created.
void atomic_write(const std::filesystem::path& path, std::string_view contents);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Records the files a command wrote so the run manifest can list their digests.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path(const std::string& name) const { return root_ / name; }

  void write(const std::string& name, std::string_view contents);
  void write_json(const std::string& name, const nlohmann::json& j);
  /// Registers a file or directory written by other means (e.g. a checkpoint).
  void record(const std::string& name);

  /// Relative path and SHA-256 of every recorded file, sorted by path.
  nlohmann::json digests() const;

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

}  // namespace kacq::cli
