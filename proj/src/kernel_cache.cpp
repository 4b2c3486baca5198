#include "anisoheat/kernel_cache.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "anisoheat/digest.hpp"
#include "anisoheat/errors.hpp"

namespace anisoheat {

namespace {

constexpr char kMagic[4] = {'A', 'H', 'K', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kTag = 0x01020304;

template <class T>
T byteswap(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
}

class Writer {
public:
    template <class T>
    void put(T v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}
    template <class T>
    T get() {
        T v;
        raw(&v, sizeof(T));
        return swap_ ? byteswap(v) : v;
    }
    void raw(void* out, std::size_t n) {
        if (pos_ + n > end_) throw Error(ErrorCode::CacheCorrupt, "cache entry is truncated");
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    void set_swap(bool s) { swap_ = s; }
    std::size_t position() const { return pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
    bool swap_ = false;
};

}  // namespace

std::vector<std::uint8_t> encode_cache_entry(const KernelCacheEntry& e) {
    if (e.config_hash.size() != 64) throw Error(ErrorCode::InvalidArgument, "config hash must be 64 hex digits");
    if (e.values.size() != e.slices.size() * e.points) throw Error(ErrorCode::InvalidArgument, "payload size mismatch");
    Writer w;
    w.raw(kMagic, 4);
    w.put(kVersion);
    w.put(kTag);
    w.raw(e.config_hash.data(), 64);
    w.put(e.node);
    w.put(e.time);
    w.put(static_cast<std::uint64_t>(e.slices.size()));
    w.put(e.points);
    for (auto s : e.slices) w.put(s);
    w.raw(e.values.data(), e.values.size() * sizeof(double));
    const auto digest = sha256(w.bytes);
    w.raw(digest.data(), digest.size());
    return std::move(w.bytes);
}

KernelCacheEntry decode_cache_entry(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 + 4 + 4 + 64 + 32) throw Error(ErrorCode::CacheCorrupt, "cache entry is truncated");
    const std::size_t body = bytes.size() - 32;
    const auto digest = sha256({bytes.data(), body});
    if (std::memcmp(digest.data(), bytes.data() + body, 32) != 0) {
        throw Error(ErrorCode::CacheCorrupt, "cache checksum mismatch");
    }
    Reader r(bytes, body);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::CacheCorrupt, "not a kernel cache file");
    std::uint32_t version;
    std::uint32_t tag;
    r.raw(&version, 4);
    r.raw(&tag, 4);
    if (tag == byteswap(kTag)) {
        r.set_swap(true);
        version = byteswap(version);
    } else if (tag != kTag) {
        throw Error(ErrorCode::CacheCorrupt, "unknown endianness tag");
    }
    if (version != kVersion) throw Error(ErrorCode::CacheCorrupt, "unsupported cache version");
    KernelCacheEntry e;
    e.config_hash.resize(64);
    r.raw(e.config_hash.data(), 64);
    e.node = r.get<std::uint64_t>();
    e.time = r.get<double>();
    const auto count = r.get<std::uint64_t>();
    e.points = r.get<std::uint64_t>();
    if (count > body || e.points > body) throw Error(ErrorCode::CacheCorrupt, "implausible cache dimensions");
    e.slices.resize(count);
    for (auto& s : e.slices) s = r.get<std::uint64_t>();
    if (r.position() + count * e.points * sizeof(double) != body) {
        throw Error(ErrorCode::CacheCorrupt, "cache payload has the wrong length");
    }
    e.values.resize(count * e.points);
    for (auto& v : e.values) v = r.get<double>();
    return e;
}

KernelCache::KernelCache(std::filesystem::path root, std::string config_hash)
    : root_(std::move(root)), hash_(std::move(config_hash)), dir_(root_ / hash_) {}

std::filesystem::path KernelCache::entry_path(std::uint64_t node) const {
    return dir_ / ("node_" + std::to_string(node) + ".bin");
}

std::optional<KernelCacheEntry> KernelCache::load(std::uint64_t node) const {
    const auto path = entry_path(node);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    KernelCacheEntry e;
    try {
        e = decode_cache_entry(bytes);
    } catch (const Error& err) {
        throw Error(ErrorCode::CacheCorrupt, path.string() + ": " + err.what());
    }
    if (e.config_hash != hash_ || e.node != node) {
        throw Error(ErrorCode::CacheCorrupt, path.string() + ": entry belongs to another configuration or node");
    }
    ++hits_;
    return e;
}

void KernelCache::store(const KernelCacheEntry& entry) const {
    if (entry.config_hash != hash_) throw Error(ErrorCode::InvalidArgument, "entry hash does not match the cache");
    const auto bytes = encode_cache_entry(entry);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir_.string() + ": " + ec.message());
    const auto target = entry_path(entry.node);
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace anisoheat
