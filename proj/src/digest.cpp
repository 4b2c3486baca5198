#include "anisoheat/digest.hpp"

#include <fstream>
#include <iterator>
#include <vector>

#include <openssl/evp.h>

#include "anisoheat/errors.hpp"

namespace anisoheat {

Sha256 sha256(std::span<const std::uint8_t> bytes) {
    Sha256 out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
        throw Error(ErrorCode::IoFailure, "SHA-256 failed");
    }
    return out;
}

std::string hex(std::span<const std::uint8_t> bytes) {
    static const char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(2 * bytes.size());
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

std::string sha256_hex(std::string_view text) {
    const auto d = sha256({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    return hex(d);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    const std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex({data.data(), data.size()});
}

}  // namespace anisoheat
