#include "fdm/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

namespace fdm {

namespace {

constexpr char kMagic[8] = {'F', 'D', 'M', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                          static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t x;
    std::memcpy(&x, &d, 8);
    write_u64(os, x);
}

bool read_u32(std::istream& is, std::uint32_t& x) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    x = b[0] | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
    return true;
}

bool read_u64(std::istream& is, std::uint64_t& x) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    x = 0;
    for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
    return true;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& ps,
                     const std::string& config_text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail("checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, 8);
    write_u32(os, static_cast<std::uint32_t>(config_text.size()));
    os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::string& name = ps.name(i);
        const Tensor& t = ps.param(i);
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (int d : t.dims) write_u64(os, static_cast<std::uint64_t>(d));
        for (double x : t.v) write_f64(os, x);
    }
    if (!os) fail("checkpoint: write failure on " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("checkpoint: cannot open " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        fail("checkpoint: bad magic in " + path);
    std::uint32_t cfg_len;
    if (!read_u32(is, cfg_len)) fail("checkpoint: truncated header in " + path);
    CheckpointData data;
    data.config_text.resize(cfg_len);
    if (cfg_len && !is.read(data.config_text.data(), cfg_len))
        fail("checkpoint: truncated config block in " + path);
    while (true) {
        std::uint32_t name_len;
        if (!read_u32(is, name_len)) break;  // clean end of file
        std::string name(name_len, '\0');
        if (name_len == 0 || !is.read(name.data(), name_len))
            fail("checkpoint: truncated record name in " + path);
        std::uint32_t rank;
        if (!read_u32(is, rank) || rank < 1 || rank > 4)
            fail("checkpoint: bad rank for record " + name);
        std::vector<int> dims(rank);
        std::size_t numel = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            std::uint64_t e;
            if (!read_u64(is, e) || e == 0 || e > (1u << 24))
                fail("checkpoint: bad extent for record " + name);
            dims[r] = static_cast<int>(e);
            numel *= e;
        }
        Tensor t(dims);
        for (std::size_t i = 0; i < numel; ++i) {
            std::uint64_t bits;
            if (!read_u64(is, bits)) fail("checkpoint: truncated payload for record " + name);
            double d;
            std::memcpy(&d, &bits, 8);
            t.v[i] = d;
        }
        data.records.emplace_back(std::move(name), std::move(t));
    }
    return data;
}

void restore_params(ParamStore& ps, const CheckpointData& data) {
    std::set<std::string> covered;
    for (const auto& [name, t] : data.records) {
        Tensor* p = ps.find(name);
        if (!p) fail("checkpoint: unknown parameter " + name);
        if (!p->same_shape(t))
            fail("checkpoint: shape mismatch for " + name + ": model " + p->shape_str() +
                 " vs checkpoint " + t.shape_str());
        p->v = t.v;
        covered.insert(name);
    }
    for (std::size_t i = 0; i < ps.size(); ++i)
        if (!covered.count(ps.name(i)))
            fail("checkpoint: parameter " + ps.name(i) + " missing from checkpoint");
}

}  // namespace fdm
