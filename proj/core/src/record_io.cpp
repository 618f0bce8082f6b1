#include "eepn/record_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eepn/error.hpp"

namespace eepn {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffU) << (8 * (7 - i));
    return out;
}

void put_u64(std::ostream& out, std::uint64_t v) {
    const std::uint64_t le = to_little(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof le);
}

void put_doubles(std::ostream& out, const double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) put_u64(out, std::bit_cast<std::uint64_t>(data[i]));
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ConfigError("record file is truncated");
    return to_little(v);
}

void get_doubles(std::istream& in, double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(get_u64(in));
}

}  // namespace

void write_record(const std::filesystem::path& path, const ReceptionRecord& record) {
    const std::size_t n = record.size();
    if (record.x.size() != n || record.phi_tx.size() != n || record.phi_lo.size() != n || record.n.size() != n) {
        throw ConfigError("write_record: fields are not aligned");
    }
    const nlohmann::json header = {{"config", record.config},
                                   {"length", n},
                                   {"fields", {"x", "phi_tx", "phi_lo", "n", "y"}},
                                   {"complex", {true, false, false, true, true}}};
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(kRecordMagic.data(), static_cast<std::streamsize>(kRecordMagic.size()));
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put_doubles(out, reinterpret_cast<const double*>(record.x.data()), 2 * n);
    put_doubles(out, record.phi_tx.data(), n);
    put_doubles(out, record.phi_lo.data(), n);
    put_doubles(out, reinterpret_cast<const double*>(record.n.data()), 2 * n);
    put_doubles(out, reinterpret_cast<const double*>(record.y.data()), 2 * n);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

ReceptionRecord read_record(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open record " + path.string());
    char magic[8] = {};
    in.read(magic, sizeof magic);
    if (!in || std::string_view(magic, sizeof magic) != kRecordMagic) throw ConfigError("not a reception record");
    const std::uint64_t header_size = get_u64(in);
    if (header_size > (std::uint64_t{1} << 24)) throw ConfigError("record header is implausibly large");
    std::string text(header_size, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_size));
    if (!in) throw ConfigError("record file is truncated");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad record header: ") + e.what());
    }
    ReceptionRecord record;
    record.config = header.at("config").get<LinkConfig>();
    const auto n = header.at("length").get<std::size_t>();
    record.x.resize(n);
    record.phi_tx.resize(n);
    record.phi_lo.resize(n);
    record.n.resize(n);
    record.y.resize(n);
    get_doubles(in, reinterpret_cast<double*>(record.x.data()), 2 * n);
    get_doubles(in, record.phi_tx.data(), n);
    get_doubles(in, record.phi_lo.data(), n);
    get_doubles(in, reinterpret_cast<double*>(record.n.data()), 2 * n);
    get_doubles(in, reinterpret_cast<double*>(record.y.data()), 2 * n);
    return record;
}

}  // namespace eepn
