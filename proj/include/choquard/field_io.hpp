#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "choquard/field.hpp"
#include "choquard/grid.hpp"
#include "choquard/params.hpp"

namespace choquard {

/// Atomically replaces `path` with `content` (write to a temp file, rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Field dump: flat little-endian float64 binary in row-major node order at
/// <base>.f64, plus a JSON sidecar <base>.json with {dims, extent, params}.
inline void save_field(const Field& u, const std::filesystem::path& base,
                       const Params* params = nullptr) {
    std::string raw(u.size() * sizeof(double), '\0');
    static_assert(sizeof(double) == 8);
    std::memcpy(raw.data(), u.v.data(), raw.size());
    std::filesystem::path bin = base;
    bin += ".f64";
    write_file_atomic(bin, raw);

    nlohmann::json side;
    std::vector<int> dims(static_cast<std::size_t>(u.grid.dim), u.grid.n);
    side["dims"] = dims;
    side["extent"] = u.grid.extent;
    if (params) {
        side["params"] = {{"N", params->dim},
                          {"alpha", params->alpha},
                          {"p", params->p},
                          {"mode", to_string(params->mode)}};
    }
    std::filesystem::path meta = base;
    meta += ".json";
    write_file_atomic(meta, side.dump(2) + "\n");
}

inline Field load_field(const std::filesystem::path& base) {
    std::filesystem::path meta = base;
    meta += ".json";
    nlohmann::json side = nlohmann::json::parse(read_file(meta));
    std::vector<int> dims = side.at("dims").get<std::vector<int>>();
    for (std::size_t d = 1; d < dims.size(); ++d)
        if (dims[d] != dims[0]) throw std::runtime_error("load_field: box is not cubic");
    Grid g{static_cast<int>(dims.size()), dims.at(0), side.at("extent").get<double>()};
    g.validate();
    std::filesystem::path bin = base;
    bin += ".f64";
    std::string raw = read_file(bin);
    if (raw.size() != g.size() * sizeof(double))
        throw std::runtime_error("load_field: payload size mismatch");
    Field u(g);
    std::memcpy(u.v.data(), raw.data(), raw.size());
    return u;
}

/// SHA-1, used for the git-style content hash in run manifests.
inline std::string sha1_hex(const std::string& data) {
    auto rotl = [](std::uint32_t x, int c) { return (x << c) | (x >> (32 - c)); };
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
    std::string msg = data;
    std::uint64_t bits = static_cast<std::uint64_t>(msg.size()) * 8;
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i) {
            w[i] = 0;
            for (int b = 0; b < 4; ++b)
                w[i] = (w[i] << 8) | static_cast<std::uint8_t>(msg[chunk + 4 * i + b]);
        }
        for (int i = 16; i < 80; ++i) w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            std::uint32_t tmp = rotl(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rotl(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (std::uint32_t word : h)
        for (int i = 7; i >= 0; --i) out.push_back(hex[(word >> (4 * i)) & 0xf]);
    return out;
}

/// Git blob hash of a file's content.
inline std::string git_blob_hash(const std::string& content) {
    std::string framed = "blob " + std::to_string(content.size());
    framed.push_back('\0');
    framed += content;
    return sha1_hex(framed);
}

} // namespace choquard
