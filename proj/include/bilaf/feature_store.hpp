#pragma once
// Feature pools: the canonical binary format, CSV ingestion, synthetic
// Gaussian-mixture generation, and validation.
//
// Binary layout (little-endian throughout):
//   bytes 0..3    magic "BLAF"
//   bytes 4..7    u32 version (currently 1)
//   bytes 8..11   u32 N (row count)
//   bytes 12..15  u32 d (columns per row)
//   byte  16      u8 normalize flag (rows are L2-normalized on load)
//   byte  17      u8 has-labels flag
//   bytes 18..19  zero padding
//   then N*d f32 row-major features, then (if labelled) N u32 labels.
//
// CSV is a convenience ingestion path only: one row per line of
// comma-separated decimals, optionally ending in "label:<int>".

#include "bilaf/common.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace bilaf {

inline constexpr double kRowNormTolerance = 1e-4;

struct FeaturePool {
    std::vector<float> features;       // row-major n x dim
    std::vector<std::uint32_t> labels; // empty when unlabelled
    std::size_t n = 0;
    std::size_t dim = 0;
    bool normalized = false;

    bool has_labels() const { return !labels.empty(); }

    const float* row(std::size_t i) const { return features.data() + i * dim; }
    float* row(std::size_t i) { return features.data() + i * dim; }

    std::span<const float> row_span(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }
};

struct MixtureSpec {
    std::size_t num_classes = 10;
    std::size_t samples_per_class = 500;
    std::size_t dim = 32;
    double center_separation = 6.0;
    double intra_std = 1.0;
    double noise_fraction = 0.0; // drawn with 3x intra_std
    std::uint64_t seed = 0;
};

// Pre-normalization geometry of a generated mixture, for tests and
// diagnostics that need the raw sample positions.
struct MixtureGroundTruth {
    std::vector<double> centers;      // num_classes x dim
    std::vector<double> raw_features; // n x dim, before normalization
};

enum class PoolFormat { binary, csv };

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::vector<unsigned char>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline float get_f32(const unsigned char* p) {
    return std::bit_cast<float>(get_u32(p));
}

} // namespace detail

inline void validate_pool(const FeaturePool& pool) {
    if (pool.n < 1 || pool.dim < 1) throw format_error("pool must have n >= 1 and dim >= 1");
    if (pool.features.size() != pool.n * pool.dim)
        throw invariant_error("pool feature buffer does not match n*dim");
    if (pool.has_labels() && pool.labels.size() != pool.n)
        throw invariant_error("pool label count does not match n");
    for (std::size_t i = 0; i < pool.features.size(); ++i) {
        if (!std::isfinite(pool.features[i]))
            throw format_error("non-finite feature at row " + std::to_string(i / pool.dim) +
                               ", column " + std::to_string(i % pool.dim));
    }
    if (pool.normalized) {
        for (std::size_t i = 0; i < pool.n; ++i) {
            double sq = 0.0;
            const float* r = pool.row(i);
            for (std::size_t j = 0; j < pool.dim; ++j) sq += static_cast<double>(r[j]) * r[j];
            if (std::abs(std::sqrt(sq) - 1.0) > kRowNormTolerance)
                throw invariant_error("row " + std::to_string(i) +
                                      " violates the unit-norm invariant");
        }
    }
}

// Normalizes each row to unit L2 norm. Rows already within kRowNormTolerance
// of unit norm are left untouched so that save/load round-trips are exact.
inline void normalize_rows(FeaturePool& pool) {
    for (std::size_t i = 0; i < pool.n; ++i) {
        float* r = pool.row(i);
        double sq = 0.0;
        for (std::size_t j = 0; j < pool.dim; ++j) sq += static_cast<double>(r[j]) * r[j];
        const double norm = std::sqrt(sq);
        if (norm == 0.0)
            throw format_error("row " + std::to_string(i) + " has zero norm and cannot be normalized");
        if (std::abs(norm - 1.0) <= kRowNormTolerance) continue;
        for (std::size_t j = 0; j < pool.dim; ++j)
            r[j] = static_cast<float>(static_cast<double>(r[j]) / norm);
    }
    pool.normalized = true;
}

namespace detail {

inline FeaturePool load_pool_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open pool file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    constexpr std::size_t header_size = 20;
    if (bytes.size() < header_size)
        throw format_error(path.string() + ": file too small for header (" +
                           std::to_string(bytes.size()) + " bytes, need 20)");
    if (std::memcmp(bytes.data(), "BLAF", 4) != 0)
        throw format_error(path.string() + ": bad magic at byte offset 0 (expected \"BLAF\")");
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != 1)
        throw format_error(path.string() + ": unsupported version " + std::to_string(version) +
                           " at byte offset 4");
    const std::uint32_t n = get_u32(bytes.data() + 8);
    const std::uint32_t d = get_u32(bytes.data() + 12);
    if (n == 0 || d == 0)
        throw format_error(path.string() + ": header declares empty pool (N=" +
                           std::to_string(n) + ", d=" + std::to_string(d) + ")");
    const unsigned char normalize_flag = bytes[16];
    const unsigned char labels_flag = bytes[17];
    if (bytes[18] != 0 || bytes[19] != 0)
        throw format_error(path.string() + ": nonzero padding at byte offset 18");

    const std::size_t feature_bytes = std::size_t{n} * d * 4;
    const std::size_t label_bytes = labels_flag ? std::size_t{n} * 4 : 0;
    const std::size_t expected = header_size + feature_bytes + label_bytes;
    if (bytes.size() != expected)
        throw format_error(path.string() + ": payload truncated or oversized (have " +
                           std::to_string(bytes.size()) + " bytes, header implies " +
                           std::to_string(expected) + ")");

    FeaturePool pool;
    pool.n = n;
    pool.dim = d;
    pool.features.resize(std::size_t{n} * d);
    for (std::size_t i = 0; i < pool.features.size(); ++i) {
        const std::size_t off = header_size + i * 4;
        const float v = get_f32(bytes.data() + off);
        if (!std::isfinite(v))
            throw format_error(path.string() + ": non-finite feature at byte offset " +
                               std::to_string(off));
        pool.features[i] = v;
    }
    if (labels_flag) {
        pool.labels.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            pool.labels[i] = get_u32(bytes.data() + header_size + feature_bytes + i * 4);
    }
    if (normalize_flag) normalize_rows(pool);
    validate_pool(pool);
    return pool;
}

inline FeaturePool load_pool_csv(const std::filesystem::path& path, bool normalize) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open pool file: " + path.string());

    FeaturePool pool;
    std::string line;
    std::size_t line_no = 0;
    bool labels_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<float> row;
        bool row_has_label = false;
        std::uint32_t label = 0;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            std::string_view field(line.data() + pos, comma - pos);
            while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
                field.remove_prefix(1);
            while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
                field.remove_suffix(1);
            if (field.rfind("label:", 0) == 0) {
                if (comma != line.size())
                    throw format_error(path.string() + ": line " + std::to_string(line_no) +
                                       ": label column must be last");
                std::string_view num = field.substr(6);
                long long parsed = 0;
                auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), parsed);
                if (ec != std::errc{} || ptr != num.data() + num.size() || parsed < 0)
                    throw format_error(path.string() + ": line " + std::to_string(line_no) +
                                       ": bad label field \"" + std::string(field) + "\"");
                row_has_label = true;
                label = static_cast<std::uint32_t>(parsed);
            } else {
                float v = 0.0f;
                auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
                if (ec != std::errc{} || ptr != field.data() + field.size())
                    throw format_error(path.string() + ": line " + std::to_string(line_no) +
                                       ": bad numeric field \"" + std::string(field) + "\"");
                if (!std::isfinite(v))
                    throw format_error(path.string() + ": line " + std::to_string(line_no) +
                                       ": non-finite value \"" + std::string(field) + "\"");
                row.push_back(v);
            }
            pos = comma + 1;
        }
        if (row.empty())
            throw format_error(path.string() + ": line " + std::to_string(line_no) + ": empty row");
        if (pool.n == 0) {
            pool.dim = row.size();
            labels_seen = row_has_label;
        } else {
            if (row.size() != pool.dim)
                throw format_error(path.string() + ": line " + std::to_string(line_no) +
                                   ": expected " + std::to_string(pool.dim) + " values, got " +
                                   std::to_string(row.size()));
            if (row_has_label != labels_seen)
                throw format_error(path.string() + ": line " + std::to_string(line_no) +
                                   ": inconsistent label column presence");
        }
        pool.features.insert(pool.features.end(), row.begin(), row.end());
        if (row_has_label) pool.labels.push_back(label);
        ++pool.n;
    }
    if (pool.n == 0) throw format_error(path.string() + ": no rows");
    if (normalize) normalize_rows(pool);
    validate_pool(pool);
    return pool;
}

} // namespace detail

// Loads and validates a pool. For the binary format the header's normalize
// flag governs normalization; for CSV the caller decides via csv_normalize.
inline FeaturePool load_pool(const std::filesystem::path& path, PoolFormat format,
                             bool csv_normalize = false) {
    return format == PoolFormat::binary ? detail::load_pool_binary(path)
                                        : detail::load_pool_csv(path, csv_normalize);
}

inline void save_pool(const FeaturePool& pool, const std::filesystem::path& path) {
    validate_pool(pool);
    std::vector<unsigned char> bytes;
    bytes.reserve(20 + pool.features.size() * 4 + pool.labels.size() * 4);
    bytes.insert(bytes.end(), {'B', 'L', 'A', 'F'});
    detail::put_u32(bytes, 1);
    detail::put_u32(bytes, static_cast<std::uint32_t>(pool.n));
    detail::put_u32(bytes, static_cast<std::uint32_t>(pool.dim));
    bytes.push_back(pool.normalized ? 1 : 0);
    bytes.push_back(pool.has_labels() ? 1 : 0);
    bytes.push_back(0);
    bytes.push_back(0);
    for (float v : pool.features) detail::put_f32(bytes, v);
    for (std::uint32_t v : pool.labels) detail::put_u32(bytes, v);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed: " + path.string());
}

// Synthetic Gaussian mixture. Class centers are rejection-placed at pairwise
// distance >= center_separation; the trailing noise_fraction of each class is
// drawn with 3x intra_std to create peripheral outliers. Rows are normalized,
// labels populated, and the output is a pure function of the spec.
inline FeaturePool generate_mixture(const MixtureSpec& spec,
                                    MixtureGroundTruth* truth = nullptr) {
    if (spec.num_classes < 1 || spec.samples_per_class < 1 || spec.dim < 1)
        throw config_error("mixture spec must have positive classes, samples, and dim");
    if (spec.center_separation <= 0.0 || spec.intra_std <= 0.0)
        throw config_error("mixture spec must have positive separation and intra_std");
    if (spec.noise_fraction < 0.0 || spec.noise_fraction >= 1.0)
        throw config_error("noise_fraction must lie in [0, 1)");

    Rng rng(spec.seed);
    const std::size_t d = spec.dim;

    std::vector<double> centers;
    centers.reserve(spec.num_classes * d);
    constexpr int kMaxAttemptsPerCenter = 1000;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttemptsPerCenter && !placed; ++attempt) {
            std::vector<double> cand(d);
            for (std::size_t j = 0; j < d; ++j)
                cand[j] = spec.center_separation * draw_normal(rng);
            placed = true;
            for (std::size_t prev = 0; prev < c && placed; ++prev) {
                double sq = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = cand[j] - centers[prev * d + j];
                    sq += diff * diff;
                }
                if (std::sqrt(sq) < spec.center_separation) placed = false;
            }
            if (placed) centers.insert(centers.end(), cand.begin(), cand.end());
        }
        if (!placed)
            throw config_error("could not place class centers at separation " +
                               std::to_string(spec.center_separation) +
                               "; reduce center_separation or increase dim");
    }

    FeaturePool pool;
    pool.n = spec.num_classes * spec.samples_per_class;
    pool.dim = d;
    pool.features.resize(pool.n * d);
    pool.labels.resize(pool.n);
    if (truth) {
        truth->centers = centers;
        truth->raw_features.resize(pool.n * d);
    }

    const std::size_t noise_per_class =
        static_cast<std::size_t>(spec.noise_fraction * static_cast<double>(spec.samples_per_class));
    std::size_t row_idx = 0;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row_idx) {
            const bool noisy = s >= spec.samples_per_class - noise_per_class;
            const double std_dev = noisy ? 3.0 * spec.intra_std : spec.intra_std;
            float* r = pool.row(row_idx);
            for (std::size_t j = 0; j < d; ++j) {
                const double v = centers[c * d + j] + std_dev * draw_normal(rng);
                if (truth) truth->raw_features[row_idx * d + j] = v;
                r[j] = static_cast<float>(v);
            }
            pool.labels[row_idx] = static_cast<std::uint32_t>(c);
        }
    }
    normalize_rows(pool);
    validate_pool(pool);
    return pool;
}

} // namespace bilaf
