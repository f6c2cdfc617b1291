#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gdk/common.hpp"

namespace gdk {

// Little-endian scalar I/O. The host is assumed little-endian (x86/arm64);
// byte-level writes keep the on-disk formats unambiguous either way.

inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    write_bytes(out, b, 4);
}

inline void write_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("unexpected end of binary stream");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float read_f32(std::istream& in) {
    const std::uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
}

// 8-bit binary PGM (P5). Pixel values are mapped to [0, 1].
inline void write_pgm(const std::string& path, const std::vector<double>& pixels, int width,
                      int height) {
    if (static_cast<int>(pixels.size()) != width * height)
        throw ShapeError("write_pgm: pixel count does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    for (double p : pixels) {
        double c = p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
        out.put(static_cast<char>(static_cast<unsigned char>(c * 255.0 + 0.5)));
    }
}

inline std::vector<double> read_pgm(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    auto next_token = [&in, &path]() {
        std::string tok;
        int c = in.get();
        while (c != EOF) {
            if (c == '#') {  // comment to end of line
                while (c != EOF && c != '\n') c = in.get();
            } else if (std::isspace(c)) {
                c = in.get();
            } else {
                break;
            }
        }
        while (c != EOF && !std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            c = in.get();
        }
        if (tok.empty()) throw ParseError("truncated PGM header: " + path);
        return tok;
    };
    if (next_token() != "P5") throw ParseError("not a binary PGM (P5): " + path);
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
        throw ParseError("unsupported PGM geometry: " + path);
    std::vector<double> pixels(static_cast<std::size_t>(width) * height);
    for (auto& p : pixels) {
        const int c = in.get();
        if (c == EOF) throw ParseError("truncated PGM data: " + path);
        p = static_cast<double>(c) / maxval;
    }
    return pixels;
}

}  // namespace gdk
