#include "tardos/codegen.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tardos/distributions.hpp"

namespace tardos {

double generate_bias(std::uint64_t seed, std::uint64_t position, double delta) {
    const std::uint64_t key = rng::index_key(rng::purpose_key(seed, rng::Purpose::bias), position);
    return BiasDistribution(delta).sample(rng::unit_open(key));
}

std::uint64_t symbol_key(std::uint64_t seed, std::uint64_t position) {
    return rng::index_key(rng::purpose_key(seed, rng::Purpose::symbol), position);
}

PositionDraw generate_position(std::uint64_t seed, std::uint64_t position, double delta,
                               std::uint64_t n) {
    if (position < 1) throw DomainError("positions are 1-based");
    PositionDraw out;
    out.bias = generate_bias(seed, position, delta);
    const PositionColumn col{out.bias, symbol_key(seed, position)};
    out.bits.resize(n);
    for (UserId j = 0; j < n; ++j) out.bits[j] = col.bit(j) ? 1 : 0;
    return out;
}

CodeBook CodeBook::streaming(std::uint64_t seed, std::uint64_t n, std::uint64_t length, double delta) {
    if (n == 0) throw DomainError("codebook needs at least one user");
    const BiasDistribution dist(delta);
    const std::uint64_t bias_key = rng::purpose_key(seed, rng::Purpose::bias);
    CodeBook book;
    book.seed_ = seed;
    book.n_ = n;
    book.delta_ = delta;
    book.bias_.resize(length);
    for (std::uint64_t i = 1; i <= length; ++i)
        book.bias_[i - 1] = dist.sample(rng::unit_open(rng::index_key(bias_key, i)));
    return book;
}

CodeBook CodeBook::materialized(std::uint64_t seed, std::uint64_t n, std::uint64_t length, double delta) {
    return streaming(seed, n, length, delta).materialize();
}

CodeBook::CodeBook(std::uint64_t seed, double delta, std::vector<double> bias, BitMatrix matrix)
    : seed_(seed), n_(matrix.rows()), delta_(delta), materialized_(true), bias_(std::move(bias)),
      matrix_(std::move(matrix)) {
    if (matrix_.cols() != bias_.size())
        throw DomainError("codebook matrix width must equal the number of biases");
    for (double p : bias_)
        if (!(p > 0.0 && p < 1.0)) throw DomainError("codebook biases must lie in (0,1)");
}

CodeBook CodeBook::materialize() const {
    if (materialized_) return *this;
    CodeBook out = *this;
    out.materialized_ = true;
    out.matrix_ = BitMatrix(n_, length());
    for (std::uint64_t i = 1; i <= length(); ++i) {
        const PositionColumn col{bias(i), symbol_key(seed_, i)};
        for (UserId j = 0; j < n_; ++j)
            if (col.bit(j)) out.matrix_.set(j, i - 1, true);
    }
    return out;
}

bool operator==(const CodeBook& a, const CodeBook& b) {
    if (a.seed_ != b.seed_ || a.n_ != b.n_ || a.bias_ != b.bias_ ||
        std::bit_cast<std::uint64_t>(a.delta_) != std::bit_cast<std::uint64_t>(b.delta_))
        return false;
    for (std::uint64_t i = 1; i <= a.length(); ++i)
        for (UserId j = 0; j < a.n_; ++j)
            if (a.bit(j, i) != b.bit(j, i)) return false;
    return true;
}

// Persistence ----------------------------------------------------------------

namespace {

constexpr std::array<char, 8> magic = {'T', 'A', 'R', 'D', 'O', 'S', 'C', 'B'};
constexpr std::size_t header_size = 48;

class Fnv1a {
public:
    void update(const unsigned char* data, std::size_t size) {
        for (std::size_t k = 0; k < size; ++k) {
            hash_ ^= data[k];
            hash_ *= 0x100000001B3ULL;
        }
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
    return v;
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
    return v;
}

} // namespace

void write_codebook(const CodeBook& book, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CodebookError(CodebookError::Kind::io, "cannot open " + path.string() + " for writing");

    Fnv1a sum;
    std::vector<unsigned char> buf;
    auto flush = [&] {
        sum.update(buf.data(), buf.size());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        buf.clear();
    };

    buf.insert(buf.end(), magic.begin(), magic.end());
    put_u32(buf, codebook_format_version);
    put_u32(buf, 0);
    put_u64(buf, book.n());
    put_u64(buf, book.length());
    put_u64(buf, book.seed());
    put_u64(buf, std::bit_cast<std::uint64_t>(book.delta_used()));
    for (double p : book.biases()) put_u64(buf, std::bit_cast<std::uint64_t>(p));
    flush();

    const std::uint64_t row_bytes = (book.length() + 7) / 8;
    for (UserId j = 0; j < book.n(); ++j) {
        buf.assign(row_bytes, 0);
        for (std::uint64_t i = 1; i <= book.length(); ++i)
            if (book.bit(j, i)) buf[(i - 1) / 8] |= static_cast<unsigned char>(1U << ((i - 1) % 8));
        flush();
    }
    put_u64(buf, sum.value());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CodebookError(CodebookError::Kind::io, "write failed for " + path.string());
}

CodeBook read_codebook(const std::filesystem::path& path) {
    using Kind = CodebookError::Kind;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CodebookError(Kind::io, "cannot open " + path.string());
    const std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());

    const std::size_t magic_len = std::min(data.size(), magic.size());
    if (magic_len == 0 || std::memcmp(data.data(), magic.data(), magic_len) != 0)
        throw CodebookError(Kind::corrupt_header, "bad magic in " + path.string());
    if (data.size() < header_size + 8)
        throw CodebookError(Kind::checksum_failure, "truncated codebook " + path.string());

    const unsigned char* p = data.data();
    if (get_u32(p + 8) != codebook_format_version)
        throw CodebookError(Kind::corrupt_header, "unsupported codebook version");
    const std::uint64_t n = get_u64(p + 16);
    const std::uint64_t ell = get_u64(p + 24);
    const std::uint64_t seed = get_u64(p + 32);
    const double delta = std::bit_cast<double>(get_u64(p + 40));
    if (!(delta >= 0.0 && delta < 0.5))
        throw CodebookError(Kind::corrupt_header, "cutoff outside [0, 1/2) in header");
    if (n == 0 || ell == 0)
        throw CodebookError(Kind::dimension_mismatch, "codebook header has zero users or length");

    const std::uint64_t row_bytes = (ell + 7) / 8;
    constexpr std::uint64_t limit = std::uint64_t{1} << 46;
    if (ell > limit / 8 || n > limit / row_bytes)
        throw CodebookError(Kind::dimension_mismatch, "codebook dimensions are implausibly large");
    const std::uint64_t expected = header_size + 8 * ell + n * row_bytes + 8;
    if (data.size() < expected)
        throw CodebookError(Kind::checksum_failure, "truncated codebook " + path.string());
    if (data.size() > expected)
        throw CodebookError(Kind::dimension_mismatch, "trailing bytes after codebook payload");

    Fnv1a sum;
    sum.update(p, expected - 8);
    if (sum.value() != get_u64(p + expected - 8))
        throw CodebookError(Kind::checksum_failure, "checksum mismatch in " + path.string());

    std::vector<double> bias(ell);
    for (std::uint64_t i = 0; i < ell; ++i) bias[i] = std::bit_cast<double>(get_u64(p + header_size + 8 * i));
    BitMatrix matrix(n, ell);
    const unsigned char* rows = p + header_size + 8 * ell;
    for (UserId j = 0; j < n; ++j) {
        const unsigned char* row = rows + j * row_bytes;
        for (std::uint64_t i = 0; i < ell; ++i)
            if ((row[i / 8] >> (i % 8)) & 1U) matrix.set(j, i, true);
    }
    try {
        return CodeBook(seed, delta, std::move(bias), std::move(matrix));
    } catch (const DomainError& e) {
        throw CodebookError(Kind::corrupt_header, e.what());
    }
}

CodeBook read_codebook(const std::filesystem::path& path, std::uint64_t expected_n,
                       std::uint64_t expected_length) {
    CodeBook book = read_codebook(path);
    if (book.n() != expected_n || book.length() != expected_length)
        throw CodebookError(CodebookError::Kind::dimension_mismatch,
                            "codebook is " + std::to_string(book.n()) + "x" + std::to_string(book.length()) +
                                ", expected " + std::to_string(expected_n) + "x" +
                                std::to_string(expected_length));
    return book;
}

} // namespace tardos
