#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "ile/errors.hpp"

namespace ile::wire {

// Little-endian primitives shared by the dataset and checkpoint containers.
// Explicit byte order keeps the formats host-independent.

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
    if (!os) throw IoError("write failed (u32)");
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
    if (!os) throw IoError("write failed (f64)");
}

inline void put_bytes(std::ostream& os, const char* data, std::size_t n) {
    os.write(data, static_cast<std::streamsize>(n));
    if (!os) throw IoError("write failed (bytes)");
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) throw FormatError(std::string("truncated file: ") + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is, const char* what) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (is.gcount() != 8) throw FormatError(std::string("truncated file: ") + what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string get_bytes(std::istream& is, std::size_t n, const char* what) {
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) throw FormatError(std::string("truncated file: ") + what);
    return s;
}

}  // namespace ile::wire
