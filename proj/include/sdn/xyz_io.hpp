// XYZ point cloud text format: one point per line, three whitespace-separated
// decimal reals. Blank lines and lines starting with '#' are ignored on read.
// Written output uses 6 significant digits.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sdn/geometry.hpp"

namespace sdn {

inline PointCloud read_xyz(std::istream& in, const std::string& name = "<stream>") {
    PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        Point3 p;
        std::string extra;
        if (!(ls >> p.x >> p.y >> p.z))
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": expected three decimal reals");
        if (ls >> extra)
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": trailing content '" + extra + "'");
        if (!p.finite())
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": non-finite coordinate");
        cloud.push_back(p);
    }
    return cloud;
}

inline PointCloud read_xyz_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_xyz(in, path.string());
}

inline std::string format_xyz(const PointCloud& cloud) {
    std::string out;
    out.reserve(cloud.size() * 32);
    char buf[96];
    for (const auto& p : cloud) {
        std::snprintf(buf, sizeof(buf), "%.6g %.6g %.6g\n", p.x, p.y, p.z);
        out += buf;
    }
    return out;
}

/// Atomic file write: stage to a sibling temp file, then rename over target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_xyz_file(const std::filesystem::path& path, const PointCloud& cloud) {
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (!cloud[i].finite())
            throw std::runtime_error("write_xyz: non-finite point at index " + std::to_string(i));
    write_file_atomic(path, format_xyz(cloud));
}

}  // namespace sdn
