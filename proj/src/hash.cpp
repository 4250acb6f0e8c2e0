#include "fracspec/hash.hpp"

#include <cstdio>
#include <stdexcept>

#include <openssl/evp.h>

namespace fracspec {

struct Hasher::Impl {
    EVP_MD_CTX* ctx = nullptr;
};

Hasher::Hasher() : impl_(std::make_unique<Impl>()) {
    impl_->ctx = EVP_MD_CTX_new();
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 initialisation failed");
}

Hasher::~Hasher() { EVP_MD_CTX_free(impl_->ctx); }

Hasher& Hasher::bytes(const void* data, std::size_t n) {
    EVP_DigestUpdate(impl_->ctx, data, n);
    return *this;
}

Hasher& Hasher::text(std::string_view s) {
    integer(static_cast<long long>(s.size()));
    return bytes(s.data(), s.size());
}

Hasher& Hasher::number(double v) { return bytes(&v, sizeof v); }

Hasher& Hasher::integer(long long v) { return bytes(&v, sizeof v); }

Hasher& Hasher::matrix(const Eigen::MatrixXd& m) {
    integer(m.rows());
    integer(m.cols());
    return bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

Hasher& Hasher::vector(const Eigen::VectorXd& v) {
    integer(v.size());
    return bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

std::string Hasher::hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, md, &len);
    std::string out(2 * len, '0');
    for (unsigned i = 0; i < len; ++i) std::snprintf(&out[2 * i], 3, "%02x", md[i]);
    return out;
}

std::string sha256_hex(std::string_view data) { return Hasher().bytes(data.data(), data.size()).hex(); }

}  // namespace fracspec
