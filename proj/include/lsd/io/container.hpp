#pragma once

// Portable dense-matrix container:
//   8 bytes  magic "LSKMAT01"
//   u64 LE   dtype code (1 = f64)
//   u64 LE   rows
//   u64 LE   cols
//   rows*cols f64 LE, row-major

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "lsd/error.hpp"
#include "lsd/linalg.hpp"

namespace lsd::io
{

inline constexpr std::array<char, 8> kMatrixMagic = {'L', 'S', 'K', 'M', 'A', 'T', '0', '1'};
inline constexpr std::uint64_t kDtypeF64 = 1;

namespace detail
{

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v)
{
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffU));
    }
}

inline std::uint64_t get_u64(const unsigned char* p)
{
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) {
        v = (v << 8) | p[b];
    }
    return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_matrix(const Mat& m)
{
    std::vector<unsigned char> out(kMatrixMagic.begin(), kMatrixMagic.end());
    detail::put_u64(out, kDtypeF64);
    detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
    detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 8);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            detail::put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
        }
    }
    return out;
}

inline Mat decode_matrix(const std::vector<unsigned char>& bytes, const std::string& what = "matrix")
{
    constexpr std::size_t header = 8 + 3 * 8;
    if (bytes.size() < header || std::memcmp(bytes.data(), kMatrixMagic.data(), 8) != 0) {
        fail(ErrorCode::ParseError, what + ": not a matrix container (bad magic)");
    }
    const std::uint64_t dtype = detail::get_u64(bytes.data() + 8);
    const std::uint64_t rows = detail::get_u64(bytes.data() + 16);
    const std::uint64_t cols = detail::get_u64(bytes.data() + 24);
    if (dtype != kDtypeF64) {
        fail(ErrorCode::ParseError, what + ": unsupported dtype code " + std::to_string(dtype));
    }
    if (cols != 0 && rows > (bytes.size() / 8) / cols) {
        fail(ErrorCode::ParseError, what + ": dimensions exceed payload");
    }
    if (bytes.size() != header + rows * cols * 8) {
        fail(ErrorCode::ParseError, what + ": payload length does not match " + std::to_string(rows) + "x" +
                                        std::to_string(cols));
    }
    Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
    const unsigned char* p = bytes.data() + header;
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c, p += 8) {
            m(r, c) = std::bit_cast<double>(detail::get_u64(p));
        }
    }
    return m;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary file and renames it over the target.
inline void write_atomic(const std::filesystem::path& path, const void* data, std::size_t size)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        out.flush();
        if (!out) {
            fail(ErrorCode::IoError, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        fail(ErrorCode::IoError, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline void write_atomic(const std::filesystem::path& path, const std::string& text)
{
    write_atomic(path, text.data(), text.size());
}

inline void write_matrix(const std::filesystem::path& path, const Mat& m)
{
    const auto bytes = encode_matrix(m);
    write_atomic(path, bytes.data(), bytes.size());
}

inline Mat read_matrix(const std::filesystem::path& path) { return decode_matrix(read_bytes(path), path.string()); }

inline Vec read_vector(const std::filesystem::path& path)
{
    const Mat m = read_matrix(path);
    require(m.cols() == 1, ErrorCode::DimensionMismatch, path.string() + ": expected a column vector");
    return m.col(0);
}

/// Sparse matrices are stored as an nnz x 3 (row, col, value) table with a
/// leading (rows, cols, nnz) line.
inline Mat sparse_to_table(const SpMat& s)
{
    Mat t(s.nonZeros() + 1, 3);
    t.row(0) << static_cast<double>(s.rows()), static_cast<double>(s.cols()), static_cast<double>(s.nonZeros());
    Index r = 1;
    for (Index c = 0; c < s.outerSize(); ++c) {
        for (SpMat::InnerIterator it(s, c); it; ++it, ++r) {
            t.row(r) << static_cast<double>(it.row()), static_cast<double>(it.col()), it.value();
        }
    }
    return t;
}

inline SpMat table_to_sparse(const Mat& t)
{
    require(t.cols() == 3 && t.rows() >= 1, ErrorCode::ParseError, "sparse table must have 3 columns");
    SpMat s(static_cast<Index>(t(0, 0)), static_cast<Index>(t(0, 1)));
    std::vector<Triplet> trip;
    for (Index r = 1; r < t.rows(); ++r) {
        trip.emplace_back(static_cast<Index>(t(r, 0)), static_cast<Index>(t(r, 1)), t(r, 2));
    }
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

}  // namespace lsd::io
