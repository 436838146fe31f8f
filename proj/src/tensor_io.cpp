#include "gstrument/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gstrument/errors.hpp"

namespace gstrument {
namespace {

static_assert(std::endian::native == std::endian::little,
              "GSTM I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size())
    throw IoError("GSTM truncated: " + path.string());
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::size_t Tensor::size() const {
  std::size_t n = dims.empty() ? 0 : 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

Tensor read_gstm(const std::filesystem::path& path) {
  const std::string raw = slurp(path);
  if (raw.size() < 4 || raw.compare(0, 4, "GSTM") != 0)
    throw IoError("not a GSTM file: " + path.string());
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(raw, pos, path);
  if (version != kGstmVersion)
    throw IoError("unsupported GSTM version " + std::to_string(version));
  const auto ndim = take<std::uint32_t>(raw, pos, path);
  if (ndim > 8) throw IoError("implausible GSTM rank " + std::to_string(ndim));
  Tensor t;
  for (std::uint32_t i = 0; i < ndim; ++i) t.dims.push_back(take<std::uint64_t>(raw, pos, path));
  const std::size_t n = t.size();
  if (raw.size() - pos != n * sizeof(float))
    throw IoError("GSTM payload size mismatch: " + path.string());
  t.data.resize(n);
  std::memcpy(t.data.data(), raw.data() + pos, n * sizeof(float));
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) {
      std::filesystem::remove(tmp);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("rename failed for " + path.string() + ": " + ec.message());
  }
}

void write_gstm(const std::filesystem::path& path, const Tensor& t) {
  if (t.data.size() != t.size()) throw InvalidArgument("tensor dims do not match payload");
  std::string out;
  out.reserve(16 + 8 * t.dims.size() + 4 * t.data.size());
  out.append("GSTM");
  put<std::uint32_t>(out, kGstmVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put<std::uint64_t>(out, d);
  out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  write_file_atomic(path, out);
}

Tensor to_tensor(const Eigen::MatrixXd& m) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.resize(t.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.data[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
  return t;
}

Tensor to_tensor(const Eigen::VectorXd& v) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(v.size())};
  t.data.resize(t.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) t.data[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
  return t;
}

Eigen::MatrixXd to_matrix(const Tensor& t) {
  if (t.dims.size() == 1) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.dims[0]), 1);
    for (std::size_t i = 0; i < t.data.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = t.data[i];
    return m;
  }
  if (t.dims.size() != 2) throw InvalidArgument("expected a rank-1 or rank-2 tensor");
  const auto rows = static_cast<Eigen::Index>(t.dims[0]);
  const auto cols = static_cast<Eigen::Index>(t.dims[1]);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t.data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace gstrument
