#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace anisoheat {

/// One cached time node: frozen kernels for a list of base-point indices,
/// each stored centered at the origin.
struct KernelCacheEntry {
    std::string config_hash;
    std::uint64_t node = 0;
    double time = 0.0;
    std::vector<std::uint64_t> slices;
    std::uint64_t points = 0;
    /// slices.size() × points values, slice-major.
    std::vector<double> values;
};

/// Directory of per-node binary files under <root>/<config hash>/.
///
/// File layout, in the writer's byte order as declared by the tag:
///   "AHKC" | u32 version | u32 endianness tag 0x01020304 | 64-byte hex hash |
///   u64 node | f64 time | u64 slice count | u64 points | u64 slices[] |
///   f64 values[] | 32-byte SHA-256 of everything before it.
/// Files are written to a temporary name and renamed into place.
class KernelCache {
public:
    KernelCache(std::filesystem::path root, std::string config_hash);

    const std::filesystem::path& directory() const noexcept { return dir_; }
    std::filesystem::path entry_path(std::uint64_t node) const;

    /// nullopt when absent. Throws CacheCorrupt on a bad checksum, a foreign
    /// hash or a truncated file.
    std::optional<KernelCacheEntry> load(std::uint64_t node) const;
    void store(const KernelCacheEntry& entry) const;

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    std::filesystem::path root_;
    std::string hash_;
    std::filesystem::path dir_;
    mutable std::size_t hits_ = 0;
    mutable std::size_t misses_ = 0;
};

/// Serialized bytes of an entry; exposed for tests.
std::vector<std::uint8_t> encode_cache_entry(const KernelCacheEntry& entry);
KernelCacheEntry decode_cache_entry(const std::vector<std::uint8_t>& bytes);

}  // namespace anisoheat
