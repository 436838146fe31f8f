#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gstrument {

/// Dense f32 tensor in row-major order, the in-memory form of a GSTM file.
///
/// On disk: magic "GSTM", u32 version (1), u32 ndim, ndim x u64 dims, then
/// the row-major f32 payload. All integers and floats are little-endian.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::size_t size() const;
};

inline constexpr std::uint32_t kGstmVersion = 1;

Tensor read_gstm(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a partial file at `path`.
void write_gstm(const std::filesystem::path& path, const Tensor& t);

Tensor to_tensor(const Eigen::MatrixXd& m);
Tensor to_tensor(const Eigen::VectorXd& v);
/// Rank-2 tensor to matrix; rank-1 becomes a single column.
Eigen::MatrixXd to_matrix(const Tensor& t);

/// Writes `contents` to `path` via temp file + rename, creating missing
/// parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace gstrument
