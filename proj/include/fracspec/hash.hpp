#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace fracspec {

/// Incremental SHA-256 used for provenance hashes.
class Hasher {
public:
    Hasher();
    ~Hasher();
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;

    Hasher& bytes(const void* data, std::size_t n);
    Hasher& text(std::string_view s);
    Hasher& number(double v);
    Hasher& integer(long long v);
    Hasher& matrix(const Eigen::MatrixXd& m);
    Hasher& vector(const Eigen::VectorXd& v);
    std::string hex();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view data);

}  // namespace fracspec
