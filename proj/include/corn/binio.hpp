#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "corn/error.hpp"

// Little-endian primitive encoding shared by the dataset, checkpoint and
// cloud-sequence formats.
namespace corn::binio {

template <class UInt>
void put_uint(std::ostream& out, UInt v) {
    char bytes[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes, sizeof(UInt));
}

inline void put_u8(std::ostream& out, std::uint8_t v) { put_uint(out, v); }
inline void put_u16(std::ostream& out, std::uint16_t v) { put_uint(out, v); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_uint(out, v); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_uint(out, v); }
inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

// Reader that raises `on_short` when the stream ends early.
class Reader {
public:
    Reader(std::istream& in, ErrorCode on_short) : in_(in), on_short_(on_short) {}

    void bytes(char* dst, std::size_t n, const char* what) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw Error(on_short_, std::string("unexpected end of file reading ") + what);
        }
    }

    template <class UInt>
    UInt uint(const char* what) {
        unsigned char b[sizeof(UInt)];
        bytes(reinterpret_cast<char*>(b), sizeof(UInt), what);
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(b[i]) << (8 * i);
        return v;
    }

    std::uint8_t u8(const char* what) { return uint<std::uint8_t>(what); }
    std::uint16_t u16(const char* what) { return uint<std::uint16_t>(what); }
    std::uint32_t u32(const char* what) { return uint<std::uint32_t>(what); }
    std::uint64_t u64(const char* what) { return uint<std::uint64_t>(what); }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::istream& in_;
    ErrorCode on_short_;
};

}  // namespace corn::binio
