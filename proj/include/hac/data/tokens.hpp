#pragma once

#include <fstream>

#include "hac/core/binio.hpp"

namespace hac {

struct TokenLayer {
    std::string name;        // "lexical", "phonetic", "acoustic_1", ...
    long codebook_size = 0;  // K >= 1

    long bits() const {
        long b = 0;
        while ((1L << b) < codebook_size) ++b;
        return b;  // ceil(log2(K)); 0 for K == 1
    }
};

// Per-frame discrete codes for every quantizer layer.
// codes is frames x layers, row-major, codes[f*L + l] in [0, K_l).
struct TokenMatrix {
    real frame_rate = 0.0;   // frames per second (rational num/den on disk)
    long frame_rate_num = 0;
    long frame_rate_den = 1;
    std::vector<TokenLayer> layers;
    std::vector<long> codes;

    long num_frames() const {
        return layers.empty() ? 0 : (long)codes.size() / (long)layers.size();
    }
    long num_layers() const { return (long)layers.size(); }
    long& at(long f, long l) { return codes[(size_t)(f * num_layers() + l)]; }
    long at(long f, long l) const { return codes[(size_t)(f * num_layers() + l)]; }

    long bits_per_frame() const {
        long b = 0;
        for (const auto& l : layers) b += l.bits();
        return b;
    }

    void set_frame_rate(long num, long den) {
        check(num > 0 && den > 0, "token matrix: frame rate must be positive");
        frame_rate_num = num;
        frame_rate_den = den;
        frame_rate = (real)num / (real)den;
    }

    void validate() const {
        check(!layers.empty(), "token matrix: no layers");
        check(frame_rate_num > 0 && frame_rate_den > 0, "token matrix: frame rate not set");
        check(codes.size() % layers.size() == 0, "token matrix: ragged code array");
        check(num_frames() >= 1, "token matrix: no frames");
        for (long f = 0; f < num_frames(); ++f)
            for (long l = 0; l < num_layers(); ++l) {
                const long c = at(f, l);
                check(0 <= c && c < layers[(size_t)l].codebook_size,
                      "token matrix: code " + std::to_string(c) + " out of range for layer " +
                          layers[(size_t)l].name);
            }
    }

    bool operator==(const TokenMatrix& o) const {
        if (frame_rate_num != o.frame_rate_num || frame_rate_den != o.frame_rate_den) return false;
        if (layers.size() != o.layers.size()) return false;
        for (size_t i = 0; i < layers.size(); ++i)
            if (layers[i].name != o.layers[i].name ||
                layers[i].codebook_size != o.layers[i].codebook_size)
                return false;
        return codes == o.codes;
    }
};

namespace token_detail {

inline constexpr char kMagic[4] = {'H', 'A', 'C', 'T'};
inline constexpr std::uint16_t kVersion = 1;

struct BitWriter {
    std::vector<std::uint8_t> bytes;
    int nbits = 0;

    void put(std::uint64_t value, long width) {  // MSB-first
        for (long i = width - 1; i >= 0; --i) {
            if (nbits == 0) bytes.push_back(0);
            const int shift = 7 - nbits;
            bytes.back() |= (std::uint8_t)(((value >> i) & 1u) << shift);
            nbits = (nbits + 1) % 8;
        }
    }
};

struct BitReader {
    const std::uint8_t* p;
    size_t len;
    size_t pos = 0;  // bit position

    std::uint64_t get(long width) {
        std::uint64_t v = 0;
        for (long i = 0; i < width; ++i) {
            const size_t byte = pos / 8;
            check(byte < len, "token file: truncated payload");
            const int shift = 7 - (int)(pos % 8);
            v = (v << 1) | ((p[byte] >> shift) & 1u);
            ++pos;
        }
        return v;
    }
};

}  // namespace token_detail

// Codes are packed per frame in layer-table order at ceil(log2(K)) bits each,
// MSB-first; the final byte is zero padded.
inline void write_tokens(const TokenMatrix& tokens, const std::string& path) {
    tokens.validate();
    BinWriter w(path);
    w.bytes(token_detail::kMagic, 4);
    w.u16(token_detail::kVersion);
    w.u32((std::uint32_t)tokens.frame_rate_num);
    w.u32((std::uint32_t)tokens.frame_rate_den);
    w.u16((std::uint16_t)tokens.layers.size());
    for (const auto& l : tokens.layers) {
        w.str(l.name);
        w.u32((std::uint32_t)l.codebook_size);
    }
    w.u32((std::uint32_t)tokens.num_frames());
    token_detail::BitWriter bits;
    for (long f = 0; f < tokens.num_frames(); ++f)
        for (long l = 0; l < tokens.num_layers(); ++l)
            bits.put((std::uint64_t)tokens.at(f, l), tokens.layers[(size_t)l].bits());
    w.u64((std::uint64_t)bits.bytes.size());
    if (!bits.bytes.empty()) w.bytes(bits.bytes.data(), bits.bytes.size());
    w.close();
}

inline TokenMatrix read_tokens(const std::string& path) {
    BinReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    check(std::memcmp(magic, token_detail::kMagic, 4) == 0, "not a token file: " + path);
    const std::uint16_t version = r.u16();
    check(version == token_detail::kVersion,
          "token file version mismatch: got " + std::to_string(version) + ", expected " +
              std::to_string(token_detail::kVersion) + ": " + path);
    TokenMatrix t;
    const long num = (long)r.u32();
    const long den = (long)r.u32();
    t.set_frame_rate(num, den);
    const long nl = (long)r.u16();
    check(nl >= 1, "token file: no layers: " + path);
    for (long i = 0; i < nl; ++i) {
        TokenLayer l;
        l.name = r.str();
        l.codebook_size = (long)r.u32();
        check(l.codebook_size >= 1, "token file: bad codebook size: " + path);
        t.layers.push_back(std::move(l));
    }
    const long frames = (long)r.u32();
    check(frames >= 1, "token file: no frames: " + path);
    const std::uint64_t payload_bytes = r.u64();
    std::vector<std::uint8_t> payload((size_t)payload_bytes);
    if (payload_bytes) r.bytes(payload.data(), (size_t)payload_bytes);
    long bpf = 0;
    for (const auto& l : t.layers) bpf += l.bits();
    const std::uint64_t need = ((std::uint64_t)bpf * (std::uint64_t)frames + 7) / 8;
    check(payload_bytes == need, "token file: truncated payload: " + path);
    token_detail::BitReader bits{payload.data(), payload.size()};
    t.codes.resize((size_t)(frames * nl));
    for (long f = 0; f < frames; ++f)
        for (long l = 0; l < nl; ++l) {
            const long c = (long)bits.get(t.layers[(size_t)l].bits());
            check(c < t.layers[(size_t)l].codebook_size,
                  "token file: code out of range in layer " + t.layers[(size_t)l].name + ": " + path);
            t.at(f, l) = c;
        }
    return t;
}

// Column of codes for the named layer.
inline std::vector<long> layer_codes(const TokenMatrix& t, const std::string& layer_name) {
    long li = -1;
    for (long l = 0; l < t.num_layers(); ++l)
        if (t.layers[(size_t)l].name == layer_name) li = l;
    check(li >= 0, "no such token layer: " + layer_name);
    std::vector<long> out((size_t)t.num_frames());
    for (long f = 0; f < t.num_frames(); ++f) out[(size_t)f] = t.at(f, li);
    return out;
}

}  // namespace hac
