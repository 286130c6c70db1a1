#include "discovery/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include "discovery/error.hpp"

namespace discovery::crypto {

Bytes sim_sign(const Bytes& signer_secret, const Bytes& payload_digest) {
    Bytes tag(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    HMAC(EVP_sha256(), signer_secret.data(), static_cast<int>(signer_secret.size()),
         payload_digest.data(), payload_digest.size(), tag.data(), &len);
    tag.resize(len);
    return tag;
}

bool sim_verify(const Bytes& verification_key, const Bytes& payload_digest, const Bytes& tag) {
    const Bytes expected = sim_sign(verification_key, payload_digest);
    if (expected.size() != tag.size()) return false;
    return CRYPTO_memcmp(expected.data(), tag.data(), tag.size()) == 0;
}

Bytes derive_secret(std::string_view identity_id) {
    std::string seed = "discovery-sim-secret:";
    seed.append(identity_id);
    return sha256(seed);
}

Bytes sha256(std::string_view data) {
    Bytes out(SHA256_DIGEST_LENGTH);
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), out.data());
    return out;
}

Bytes sha256(const Bytes& data) {
    Bytes out(SHA256_DIGEST_LENGTH);
    SHA256(data.data(), data.size(), out.data());
    return out;
}

std::string to_hex(const Bytes& bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

std::string base64_encode(const Bytes& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0)
        throw Error(Errc::schema_error, "base64 length is not a multiple of 4");
    Bytes out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw Error(Errc::schema_error, "malformed base64");
    // EVP_DecodeBlock counts padding as zero bytes.
    std::size_t padding = 0;
    if (!text.empty() && text.back() == '=') ++padding;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

}  // namespace discovery::crypto
