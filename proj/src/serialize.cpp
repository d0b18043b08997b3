#include "qsamp/serialize.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace qsamp {

namespace {

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

const std::array<uint32_t, 256>& crc_table() {
    static const auto table = make_crc_table();
    return table;
}

// serialize doubles little-endian regardless of host order
void store_le64(uint8_t* dst, uint64_t bits) {
    for (int i = 0; i < 8; ++i) dst[i] = static_cast<uint8_t>(bits >> (8 * i));
}

uint64_t load_le64(const uint8_t* src) {
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(src[i]) << (8 * i);
    return bits;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
    uint32_t c = seed ^ 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) c = crc_table()[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void BlobWriter::put_doubles(const double* values, size_t count) {
    size_t base = buffer_.size();
    buffer_.resize(base + 8 * count);
    for (size_t i = 0; i < count; ++i) {
        uint64_t bits;
        std::memcpy(&bits, &values[i], 8);
        store_le64(buffer_.data() + base + 8 * i, bits);
    }
}

void BlobWriter::put_bytes(const uint8_t* bytes, size_t count) {
    buffer_.insert(buffer_.end(), bytes, bytes + count);
}

void BlobReader::get_doubles(double* values, size_t count) {
    if (remaining() < 8 * count) throw DataError("blob truncated while reading doubles");
    for (size_t i = 0; i < count; ++i) {
        uint64_t bits = load_le64(buffer_.data() + offset_ + 8 * i);
        std::memcpy(&values[i], &bits, 8);
    }
    offset_ += 8 * count;
}

void BlobReader::get_bytes(uint8_t* bytes, size_t count) {
    if (remaining() < count) throw DataError("blob truncated while reading bytes");
    std::memcpy(bytes, buffer_.data() + offset_, count);
    offset_ += count;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(path + ": write failed");
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError(path + ": cannot open file");
    auto size = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw DataError(path + ": read failed");
    return bytes;
}

std::string crc_hex(uint32_t crc) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", crc);
    return buf;
}

}  // namespace qsamp
