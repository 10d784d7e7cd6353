#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "mucon/dense_matrix.hpp"

namespace mucon {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary "DMAT1" layout: 8-byte magic "SPECDMAT", rows and cols as u64
/// little-endian, then rows·cols little-endian IEEE doubles in row-major order.
inline constexpr char kDmatMagic[8] = {'S', 'P', 'E', 'C', 'D', 'M', 'A', 'T'};

void write_dmat(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_dmat(std::istream& in);

/// Headerless comma-separated rows. Values are written in shortest
/// round-trip form, so write/read is lossless.
void write_csv(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_csv(std::istream& in);

/// Dispatches on the file contents (DMAT magic) for reading and on the
/// extension (".csv" vs anything else) for writing.
DenseMatrix load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const DenseMatrix& m);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

}  // namespace mucon
