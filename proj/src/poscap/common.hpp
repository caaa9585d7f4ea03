#ifndef POSCAP_COMMON_HPP
#define POSCAP_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poscap {

// Reserved word ids shared by every vocabulary.
constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kUnkId = 3;
constexpr int kNumReserved = 4;

// Raised for malformed or inconsistent input data (files, serialized blobs).
// Precondition violations use std::invalid_argument instead.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline DataError parse_error(const std::string& path, long line, const std::string& what) {
    return DataError(path + ":" + std::to_string(line) + ": " + what);
}

// Deterministic RNG. All derived draws are computed from raw mt19937_64
// output so results are bit-identical across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double gumbel() { return -std::log(-std::log(uniform())); }

    // Uniform index in [0, n). Modulo bias is irrelevant at the sizes used here.
    size_t uniform_index(size_t n) { return static_cast<size_t>(next_u64() % n); }

private:
    std::mt19937_64 gen_;
};

uint64_t fnv1a(std::string_view s, uint64_t h = 1469598103934665603ull);

// Whitespace-separated fields (single spaces in our formats, but tolerant).
std::vector<std::string> split_fields(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);

// Strict decimal parse; throws DataError on trailing garbage, NaN or infinity.
double parse_finite_double(const std::string& field, const std::string& path, long line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

double logsumexp(const std::vector<double>& v);

} // namespace poscap

#endif
