// CFLD field files: magic "CFLD", format version (u32), n, m, component
// count, then float64 little-endian samples, row-major, components
// consecutive.  Little-endian hosts only (checked at runtime).

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "constraints/fields.hpp"

namespace constraints {

inline constexpr std::uint32_t kCfldVersion = 1;

namespace detail {

inline void require_little_endian() {
    static_assert(std::endian::native == std::endian::little,
                  "CFLD I/O assumes a little-endian host");
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

inline void write_cfld(const std::string& path, const Grid& g,
                       const std::vector<const ScalarField*>& comps) {
    require_little_endian();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write("CFLD", 4);
    write_u32(os, kCfldVersion);
    write_u32(os, static_cast<std::uint32_t>(g.dim));
    write_u32(os, static_cast<std::uint32_t>(g.points));
    write_u32(os, static_cast<std::uint32_t>(comps.size()));
    for (const ScalarField* c : comps)
        os.write(reinterpret_cast<const char*>(c->values().data()),
                 static_cast<std::streamsize>(c->size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

struct CfldData {
    Grid grid;
    std::vector<ScalarField> components;
};

inline CfldData read_cfld(const std::string& path) {
    require_little_endian();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (std::memcmp(magic, "CFLD", 4) != 0)
        throw std::runtime_error("not a CFLD file: " + path);
    const std::uint32_t version = read_u32(is);
    if (version != kCfldVersion)
        throw std::runtime_error("unsupported CFLD version in " + path);
    const std::uint32_t n = read_u32(is);
    const std::uint32_t m = read_u32(is);
    const std::uint32_t ncomp = read_u32(is);
    CfldData data{Grid(static_cast<int>(n), static_cast<int>(m)), {}};
    for (std::uint32_t c = 0; c < ncomp; ++c) {
        ScalarField f(data.grid);
        is.read(reinterpret_cast<char*>(f.values().data()),
                static_cast<std::streamsize>(f.size() * sizeof(double)));
        if (!is) throw std::runtime_error("truncated CFLD file: " + path);
        data.components.push_back(std::move(f));
    }
    return data;
}

}  // namespace detail

inline void save_field(const std::string& path, const ScalarField& f) {
    detail::write_cfld(path, f.grid(), {&f});
}

inline void save_field(const std::string& path, const VectorField& v) {
    std::vector<const ScalarField*> comps;
    for (int c = 0; c < v.components(); ++c) comps.push_back(&v[c]);
    detail::write_cfld(path, v.grid(), comps);
}

inline void save_field(const std::string& path, const SymTensorField& s) {
    std::vector<const ScalarField*> comps;
    for (int c = 0; c < s.components(); ++c) comps.push_back(&s.component(c));
    detail::write_cfld(path, s.grid(), comps);
}

inline ScalarField load_scalar(const std::string& path) {
    auto data = detail::read_cfld(path);
    if (data.components.size() != 1)
        throw std::runtime_error("expected 1 component in " + path);
    return std::move(data.components[0]);
}

inline VectorField load_vector(const std::string& path) {
    auto data = detail::read_cfld(path);
    if (static_cast<int>(data.components.size()) != data.grid.dim)
        throw std::runtime_error("component count is not n in " + path);
    VectorField v(data.grid);
    for (int c = 0; c < data.grid.dim; ++c) v[c] = std::move(data.components[c]);
    return v;
}

inline SymTensorField load_sym_tensor(const std::string& path) {
    auto data = detail::read_cfld(path);
    if (static_cast<int>(data.components.size()) != data.grid.sym_components())
        throw std::runtime_error("component count is not n(n+1)/2 in " + path);
    SymTensorField s(data.grid);
    for (int c = 0; c < s.components(); ++c) s.component(c) = std::move(data.components[c]);
    return s;
}

}  // namespace constraints
