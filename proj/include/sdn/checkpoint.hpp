// Checkpoint format (bit-exact): magic "SDNZ1\n", UTF-8 `key=value` config
// lines terminated by one blank line, then the parameters as little-endian
// 32-bit floats in the flat layout documented in network.hpp.

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "sdn/network.hpp"
#include "sdn/xyz_io.hpp"

namespace sdn {

struct Checkpoint {
    NetworkConfig cfg;
    ScoreNetworkParams params;
    std::map<std::string, std::string> extra;  // free-form metadata (loss variant, seed, ...)
};

namespace detail {

inline std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

inline std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string part;
    while (std::getline(in, part, ',')) {
        try {
            out.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw std::runtime_error("checkpoint: bad integer list '" + s + "'");
        }
    }
    return out;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
    detail::check_params(ckpt.params, ckpt.cfg);
    std::string out = "SDNZ1\n";
    out += "graph_k=" + std::to_string(ckpt.cfg.graph_k) + "\n";
    out += "block_widths=" + detail::join_ints(ckpt.cfg.block_widths) + "\n";
    out += "score_hidden=" + detail::join_ints(ckpt.cfg.score_hidden) + "\n";
    for (const auto& [k, v] : ckpt.extra) out += k + "=" + v + "\n";
    out += "\n";
    for (double d : ckpt.params.values) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(d));
        out += static_cast<char>(bits & 0xFF);
        out += static_cast<char>((bits >> 8) & 0xFF);
        out += static_cast<char>((bits >> 16) & 0xFF);
        out += static_cast<char>((bits >> 24) & 0xFF);
    }
    return out;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, serialize_checkpoint(ckpt));
}

inline Checkpoint parse_checkpoint(const std::string& data, const std::string& name = "<memory>") {
    auto fail = [&](const std::string& msg) -> std::runtime_error {
        return std::runtime_error(name + ": " + msg);
    };
    const std::string magic = "SDNZ1\n";
    if (data.size() < magic.size() || data.compare(0, magic.size(), magic) != 0)
        throw fail("not a SDNZ1 checkpoint");

    Checkpoint ckpt;
    std::size_t pos = magic.size();
    bool saw_k = false, saw_widths = false, saw_hidden = false;
    for (;;) {
        const std::size_t eol = data.find('\n', pos);
        if (eol == std::string::npos) throw fail("unterminated header");
        const std::string line = data.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) break;  // blank line ends the header
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw fail("malformed header line '" + line + "'");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "graph_k") {
            ckpt.cfg.graph_k = std::stoi(value);
            saw_k = true;
        } else if (key == "block_widths") {
            ckpt.cfg.block_widths = detail::parse_ints(value);
            saw_widths = true;
        } else if (key == "score_hidden") {
            ckpt.cfg.score_hidden = detail::parse_ints(value);
            saw_hidden = true;
        } else {
            ckpt.extra[key] = value;
        }
    }
    if (!saw_k || !saw_widths || !saw_hidden) throw fail("missing required config keys");
    ckpt.cfg.validate();

    const std::size_t expected = ckpt.cfg.param_count();
    if (data.size() - pos != expected * 4)
        throw fail("parameter payload is " + std::to_string(data.size() - pos) + " bytes, expected " +
                   std::to_string(expected * 4));
    ckpt.params.values.resize(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        const auto b0 = static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + 4 * i]));
        const auto b1 = static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + 4 * i + 1]));
        const auto b2 = static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + 4 * i + 2]));
        const auto b3 = static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + 4 * i + 3]));
        ckpt.params.values[i] =
            static_cast<double>(std::bit_cast<float>(b0 | (b1 << 8) | (b2 << 16) | (b3 << 24)));
    }
    return ckpt;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str(), path.string());
}

}  // namespace sdn
