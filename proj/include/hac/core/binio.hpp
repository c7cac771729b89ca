#pragma once

#include <cstring>
#include <fstream>

#include "hac/core/tensor.hpp"

namespace hac {

// Little-endian binary writers/readers for the on-disk containers.
struct BinWriter {
    std::ofstream out;

    explicit BinWriter(const std::string& path) : out(path, std::ios::binary) {
        check(out.good(), "cannot open for writing: " + path);
    }
    void bytes(const void* p, size_t n) { out.write((const char*)p, (std::streamsize)n); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) {
        std::uint8_t b[2] = {(std::uint8_t)(v & 0xff), (std::uint8_t)(v >> 8)};
        bytes(b, 2);
    }
    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = (std::uint8_t)((v >> (8 * i)) & 0xff);
        bytes(b, 4);
    }
    void u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = (std::uint8_t)((v >> (8 * i)) & 0xff);
        bytes(b, 8);
    }
    void f64(real v) {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        u64(u);
    }
    void str(const std::string& s) {
        u32((std::uint32_t)s.size());
        bytes(s.data(), s.size());
    }
    void f64_vec(const std::vector<real>& v) {
        u64((std::uint64_t)v.size());
        for (real x : v) f64(x);
    }
    void close() {
        out.close();
        check(out.good(), "write failed while closing file");
    }
};

struct BinReader {
    std::ifstream in;
    std::string path;

    explicit BinReader(const std::string& p) : in(p, std::ios::binary), path(p) {
        check(in.good(), "cannot open for reading: " + p);
    }
    void bytes(void* p, size_t n) {
        in.read((char*)p, (std::streamsize)n);
        check((size_t)in.gcount() == n, "truncated file: " + path);
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint16_t u16() {
        std::uint8_t b[2];
        bytes(b, 2);
        return (std::uint16_t)(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= (std::uint32_t)b[i] << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint8_t b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= (std::uint64_t)b[i] << (8 * i);
        return v;
    }
    real f64() {
        std::uint64_t u = u64();
        real v;
        std::memcpy(&v, &u, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        std::string s((size_t)n, '\0');
        if (n) bytes(s.data(), n);
        return s;
    }
    std::vector<real> f64_vec() {
        const std::uint64_t n = u64();
        std::vector<real> v((size_t)n);
        for (auto& x : v) x = f64();
        return v;
    }
    bool at_eof() {
        return in.peek() == std::char_traits<char>::eof();
    }
};

}  // namespace hac
