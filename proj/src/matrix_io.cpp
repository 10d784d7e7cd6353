#include "mucon/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace mucon {

namespace {

static_assert(sizeof(double) == 8);

void put_u64_le(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("DMAT1: truncated header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw FormatError("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

void write_dmat(std::ostream& out, const DenseMatrix& m) {
  out.write(kDmatMagic, sizeof(kDmatMagic));
  put_u64_le(out, m.rows());
  put_u64_le(out, m.cols());
  for (double x : m.data()) put_u64_le(out, std::bit_cast<std::uint64_t>(x));
  if (!out) throw FormatError("DMAT1: write failed");
}

DenseMatrix read_dmat(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kDmatMagic, 8) != 0) {
    throw FormatError("DMAT1: bad magic");
  }
  const std::uint64_t rows = get_u64_le(in);
  const std::uint64_t cols = get_u64_le(in);
  if (rows == 0 || cols == 0) throw FormatError("DMAT1: zero dimension");
  if (rows > (std::uint64_t{1} << 32) || cols > (std::uint64_t{1} << 32)) {
    throw FormatError("DMAT1: implausible dimensions");
  }
  std::vector<double> data(rows * cols);
  for (double& x : data) x = std::bit_cast<double>(get_u64_le(in));
  try {
    return {rows, cols, std::move(data)};
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("DMAT1: ") + e.what());
  }
}

void write_csv(std::ostream& out, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

DenseMatrix read_csv(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      std::string cell = line.substr(pos, end - pos);
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      if (first == std::string::npos) throw FormatError("CSV: empty cell in row " + std::to_string(rows + 1));
      cell = cell.substr(first, last - first + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw FormatError("CSV: cannot parse '" + cell + "' in row " + std::to_string(rows + 1));
      }
      data.push_back(v);
      ++count;
      pos = end + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) throw FormatError("CSV: ragged row " + std::to_string(rows + 1));
    ++rows;
  }
  if (rows == 0) throw FormatError("CSV: no data");
  try {
    return {rows, cols, std::move(data)};
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("CSV: ") + e.what());
  }
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char head[8] = {};
  in.read(head, 8);
  const bool is_dmat = in.gcount() == 8 && std::memcmp(head, kDmatMagic, 8) == 0;
  in.clear();
  in.seekg(0);
  return is_dmat ? read_dmat(in) : read_csv(in);
}

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  if (path.extension() == ".csv") {
    write_csv(out, m);
  } else {
    write_dmat(out, m);
  }
}

}  // namespace mucon
