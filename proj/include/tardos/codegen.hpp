#ifndef TARDOS_CODEGEN_HPP
#define TARDOS_CODEGEN_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tardos/core_model.hpp"
#include "tardos/error.hpp"
#include "tardos/rng.hpp"

namespace tardos {

/// Row-major bit matrix, one row per user, rows padded to 64-bit words.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::uint64_t rows, std::uint64_t cols)
        : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64), words_(rows * words_per_row_, 0) {}

    std::uint64_t rows() const { return rows_; }
    std::uint64_t cols() const { return cols_; }

    bool get(std::uint64_t r, std::uint64_t c) const {
        return (words_[r * words_per_row_ + c / 64] >> (c % 64)) & 1U;
    }
    void set(std::uint64_t r, std::uint64_t c, bool v) {
        auto& w = words_[r * words_per_row_ + c / 64];
        const std::uint64_t mask = std::uint64_t{1} << (c % 64);
        w = v ? (w | mask) : (w & ~mask);
    }

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

private:
    std::uint64_t rows_ = 0;
    std::uint64_t cols_ = 0;
    std::uint64_t words_per_row_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Bias p_i and the per-user symbol stream key for one position.
struct PositionColumn {
    double bias = 0.5;
    std::uint64_t key = 0;

    bool bit(UserId user) const {
        return rng::unit_open(rng::user_word(key, user)) < bias;
    }
};

/// p_i for position i >= 1 under cutoff delta.
double generate_bias(std::uint64_t seed, std::uint64_t position, double delta);

/// Symbol key for position i; bits follow PositionColumn::bit.
std::uint64_t symbol_key(std::uint64_t seed, std::uint64_t position);

struct PositionDraw {
    double bias = 0.5;
    std::vector<std::uint8_t> bits; // one entry per user 0..n-1
};

/// Random access: depends only on (seed, i), never on other positions.
PositionDraw generate_position(std::uint64_t seed, std::uint64_t position, double delta,
                               std::uint64_t n);

/// Biases plus binary code matrix. Positions are 1-based, users 0-based.
/// A streaming codebook regenerates symbols from the seed on demand; a
/// materialized one stores them in a BitMatrix.
class CodeBook {
public:
    CodeBook() = default;

    static CodeBook streaming(std::uint64_t seed, std::uint64_t n, std::uint64_t length, double delta);
    static CodeBook materialized(std::uint64_t seed, std::uint64_t n, std::uint64_t length, double delta);

    /// Codebook with explicit contents (file reader, hand-built test fixtures).
    CodeBook(std::uint64_t seed, double delta, std::vector<double> bias, BitMatrix matrix);

    std::uint64_t n() const { return n_; }
    std::uint64_t length() const { return bias_.size(); }
    std::uint64_t seed() const { return seed_; }
    double delta_used() const { return delta_; }
    bool is_materialized() const { return materialized_; }

    double bias(std::uint64_t position) const { return bias_[position - 1]; }
    const std::vector<double>& biases() const { return bias_; }

    bool bit(UserId user, std::uint64_t position) const {
        if (materialized_) return matrix_.get(user, position - 1);
        return PositionColumn{bias(position), symbol_key(seed_, position)}.bit(user);
    }

    /// Column accessor for engines; for materialized books bits come from
    /// the stored matrix so hand-built fixtures are honored.
    class Column {
    public:
        Column(const CodeBook& book, std::uint64_t position)
            : book_(&book), position_(position),
              stream_{book.bias(position), book.materialized_ ? 0 : symbol_key(book.seed_, position)} {}
        double bias() const { return stream_.bias; }
        bool bit(UserId user) const {
            return book_->materialized_ ? book_->matrix_.get(user, position_ - 1) : stream_.bit(user);
        }

    private:
        const CodeBook* book_;
        std::uint64_t position_;
        PositionColumn stream_;
    };

    Column column(std::uint64_t position) const { return Column(*this, position); }

    /// Same contents with every symbol stored.
    CodeBook materialize() const;

    const BitMatrix& matrix() const { return matrix_; }

    friend bool operator==(const CodeBook& a, const CodeBook& b);

private:
    std::uint64_t seed_ = 0;
    std::uint64_t n_ = 0;
    double delta_ = 0.0;
    bool materialized_ = false;
    std::vector<double> bias_;
    BitMatrix matrix_;
};

class CodebookError : public Error {
public:
    enum class Kind { io, corrupt_header, dimension_mismatch, checksum_failure };

    CodebookError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// File layout (all integers little-endian):
//   0  magic "TARDOSCB"       8 bytes
//   8  version u32 (=1)       12 reserved u32 (=0)
//   16 n u64                  24 ell u64
//   32 seed u64               40 delta f64 (IEEE-754 bits)
//   48 ell x f64 biases
//   .. n rows x ceil(ell/8) bytes, position i at bit (i-1)%8 of byte (i-1)/8
//   .. u64 FNV-1a-64 checksum of every preceding byte
inline constexpr std::uint32_t codebook_format_version = 1;

void write_codebook(const CodeBook& book, const std::filesystem::path& path);
CodeBook read_codebook(const std::filesystem::path& path);

/// Also checks the stored dimensions against the expected ones.
CodeBook read_codebook(const std::filesystem::path& path, std::uint64_t expected_n,
                       std::uint64_t expected_length);

} // namespace tardos

#endif // TARDOS_CODEGEN_HPP
