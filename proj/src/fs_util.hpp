#pragma once

#include <filesystem>
#include <string>

namespace sidb::detail {

std::string read_file(const std::filesystem::path& p);
/// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& p, const std::string& bytes);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace sidb::detail
