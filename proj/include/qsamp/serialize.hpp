// Binary sidecar-blob encoding shared by dataset and checkpoint files:
// little-endian IEEE-754 doubles (plus raw bytes for masks), CRC-32 recorded
// in the JSON manifest next to the blob.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsamp/errors.hpp"

namespace qsamp {

inline constexpr int kFormatVersion = 1;

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);
inline uint32_t crc32(const std::vector<uint8_t>& data) { return crc32(data.data(), data.size()); }

class BlobWriter {
  public:
    void put_doubles(const double* values, size_t count);
    void put_bytes(const uint8_t* bytes, size_t count);
    const std::vector<uint8_t>& bytes() const { return buffer_; }
    uint32_t checksum() const { return crc32(buffer_); }

  private:
    std::vector<uint8_t> buffer_;
};

class BlobReader {
  public:
    explicit BlobReader(std::vector<uint8_t> bytes) : buffer_(std::move(bytes)) {}
    void get_doubles(double* values, size_t count);
    void get_bytes(uint8_t* bytes, size_t count);
    size_t remaining() const { return buffer_.size() - offset_; }
    uint32_t checksum() const { return crc32(buffer_); }

  private:
    std::vector<uint8_t> buffer_;
    size_t offset_ = 0;
};

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);
std::vector<uint8_t> read_file_bytes(const std::string& path);

// 8-hex-digit checksum string as stored in manifests.
std::string crc_hex(uint32_t crc);

}  // namespace qsamp
