#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace flowlens {

/// Dense row-major bit matrix. Rows are word-aligned and tail bits are
/// kept zero, so whole-word XOR/popcount gives exact Hamming distances.
class BitMatrix {
public:
    BitMatrix() = default;

    BitMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
          data_(rows * words_per_row_, 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t words_per_row() const noexcept { return words_per_row_; }

    void set(std::size_t r, std::size_t c, bool value) {
        const std::uint64_t mask = 1ULL << (c & 63);
        std::uint64_t& word = data_[r * words_per_row_ + (c >> 6)];
        if (value)
            word |= mask;
        else
            word &= ~mask;
    }

    bool get(std::size_t r, std::size_t c) const {
        return (data_[r * words_per_row_ + (c >> 6)] >> (c & 63)) & 1;
    }

    std::span<const std::uint64_t> row(std::size_t r) const {
        return {data_.data() + r * words_per_row_, words_per_row_};
    }

    std::span<std::uint64_t> row(std::size_t r) {
        return {data_.data() + r * words_per_row_, words_per_row_};
    }

    void assign_row(std::size_t r, std::span<const std::uint64_t> bits) {
        auto dst = row(r);
        for (std::size_t w = 0; w < words_per_row_; ++w)
            dst[w] = bits[w];
    }

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> data_;

    friend class BitMatrixBytes;

public:
    std::span<const std::uint64_t> raw() const noexcept { return data_; }
};

/// Hamming distance over word spans of equal length.
inline std::uint64_t hamming_words(std::span<const std::uint64_t> a,
                                   std::span<const std::uint64_t> b) {
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        count += static_cast<std::uint64_t>(std::popcount(a[i] ^ b[i]));
    return count;
}

/// Hamming distance between two binary vectors given bit-per-element.
/// Throws on length mismatch.
inline std::uint64_t hamming(std::span<const std::uint8_t> u, std::span<const std::uint8_t> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("hamming: length mismatch (" + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()) + ")");
    std::uint64_t count = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        count += (u[i] != 0) != (v[i] != 0);
    return count;
}

inline std::uint64_t hamming(const BitMatrix& m, std::size_t r1, std::size_t r2) {
    return hamming_words(m.row(r1), m.row(r2));
}

} // namespace flowlens
