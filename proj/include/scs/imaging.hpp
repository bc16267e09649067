#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "scs/errors.hpp"
#include "scs/gmm.hpp"
#include "scs/rng.hpp"
#include "scs/sensing.hpp"

namespace scs {

/// Grayscale image; pixels(r, c) with r < height, c < width, values in [0, 255].
struct GrayImage {
    Eigen::Index width = 0;
    Eigen::Index height = 0;
    Eigen::MatrixXd pixels;

    GrayImage() = default;
    explicit GrayImage(Eigen::MatrixXd values)
        : width(values.cols()), height(values.rows()), pixels(std::move(values)) {
        detail::require(width >= 1 && height >= 1, "GrayImage: empty image");
        detail::require(pixels.allFinite(), "GrayImage: non-finite pixel values");
    }
};

namespace detail {

class PgmCursor {
public:
    PgmCursor(const std::vector<unsigned char>& bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

    std::size_t offset() const noexcept { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    long read_uint(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000) throw FormatError(std::string("PGM: ") + what + " too large", start);
            ++pos_;
        }
        if (pos_ == start) throw FormatError(std::string("PGM: expected ") + what, start);
        return value;
    }

    void expect_single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw FormatError("PGM: expected whitespace after maxval", pos_);
        ++pos_;
    }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Binary PGM (P5) with maxval 255.
inline GrayImage parse_pgm(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("PGM: missing 'P' magic", 0);
    if (bytes[1] != '5') {
        if (bytes[1] == '2') throw FormatError("PGM: ASCII variant P2 is not supported", 1);
        throw FormatError("PGM: unsupported magic", 1);
    }
    detail::PgmCursor cur(bytes, 2);
    const long width = cur.read_uint("width");
    const long height = cur.read_uint("height");
    const long maxval = cur.read_uint("maxval");
    cur.expect_single_space();
    const std::size_t payload = cur.offset();
    if (width < 1 || height < 1) throw FormatError("PGM: image dimensions must be positive", payload);
    if (maxval != 255) throw FormatError("PGM: only maxval 255 is supported", payload);
    const std::size_t needed = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - payload < needed) throw FormatError("PGM: truncated pixel payload", bytes.size());
    Eigen::MatrixXd pixels(height, width);
    for (long r = 0; r < height; ++r)
        for (long c = 0; c < width; ++c)
            pixels(r, c) = bytes[payload + static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                                 static_cast<std::size_t>(c)];
    return GrayImage(std::move(pixels));
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pgm(bytes);
}

inline unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
}

inline std::vector<unsigned char> encode_pgm(const GrayImage& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<std::size_t>(image.width * image.height));
    for (Eigen::Index r = 0; r < image.height; ++r)
        for (Eigen::Index c = 0; c < image.width; ++c) out.push_back(to_byte(image.pixels(r, c)));
    return out;
}

/// Pixels are rounded and clamped to 8 bits.
inline void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    const auto bytes = encode_pgm(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Patch geometry over a width x height image.
struct ImageGeometry {
    Eigen::Index width = 0;
    Eigen::Index height = 0;
    Eigen::Index patch_side = 8;
    Eigen::Index stride = 8;
};

/**
 * Patches in raster order of their top-left corners. Each patch is
 * vectorized row-major: entry r * side + c holds pixel (row0 + r, col0 + c).
 */
struct PatchGrid {
    ImageGeometry geometry;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> origins;  // (row, col)
    Eigen::MatrixXd patches;                                     // side^2 x count
};

namespace detail {

/// 0, stride, 2 stride, ... plus a final start aligned to the far edge if needed.
inline std::vector<Eigen::Index> patch_starts(Eigen::Index extent, Eigen::Index side, Eigen::Index stride) {
    std::vector<Eigen::Index> starts;
    for (Eigen::Index s = 0; s + side <= extent; s += stride) starts.push_back(s);
    if (starts.back() + side < extent) starts.push_back(extent - side);
    return starts;
}

}  // namespace detail

inline std::vector<std::pair<Eigen::Index, Eigen::Index>> patch_origins(const ImageGeometry& g) {
    detail::require(g.patch_side >= 1 && g.stride >= 1, "patch geometry: side and stride must be positive");
    detail::require(g.patch_side <= std::min(g.width, g.height), "patch geometry: patch larger than the image");
    std::vector<std::pair<Eigen::Index, Eigen::Index>> origins;
    const auto rows = detail::patch_starts(g.height, g.patch_side, g.stride);
    const auto cols = detail::patch_starts(g.width, g.patch_side, g.stride);
    origins.reserve(rows.size() * cols.size());
    for (Eigen::Index r : rows)
        for (Eigen::Index c : cols) origins.emplace_back(r, c);
    return origins;
}

inline PatchGrid extract_patches(const GrayImage& image, Eigen::Index patch_side, Eigen::Index stride) {
    PatchGrid grid;
    grid.geometry = ImageGeometry{image.width, image.height, patch_side, stride};
    grid.origins = patch_origins(grid.geometry);
    const Eigen::Index n = patch_side * patch_side;
    grid.patches.resize(n, static_cast<Eigen::Index>(grid.origins.size()));
    for (std::size_t i = 0; i < grid.origins.size(); ++i) {
        const auto [r0, c0] = grid.origins[i];
        for (Eigen::Index r = 0; r < patch_side; ++r)
            for (Eigen::Index c = 0; c < patch_side; ++c)
                grid.patches(r * patch_side + c, static_cast<Eigen::Index>(i)) = image.pixels(r0 + r, c0 + c);
    }
    return grid;
}

/// Every pixel becomes the mean of the patch values covering it.
inline GrayImage reassemble(const PatchGrid& grid, Eigen::Index width, Eigen::Index height) {
    const Eigen::Index side = grid.geometry.patch_side;
    detail::require(grid.patches.cols() == static_cast<Eigen::Index>(grid.origins.size()),
                    "reassemble: one patch per origin");
    detail::require(grid.patches.rows() == side * side, "reassemble: patch length differs from side^2");
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(height, width);
    Eigen::MatrixXi hits = Eigen::MatrixXi::Zero(height, width);
    for (std::size_t i = 0; i < grid.origins.size(); ++i) {
        const auto [r0, c0] = grid.origins[i];
        detail::require(r0 >= 0 && c0 >= 0 && r0 + side <= height && c0 + side <= width,
                        "reassemble: patch outside the image");
        for (Eigen::Index r = 0; r < side; ++r)
            for (Eigen::Index c = 0; c < side; ++c) {
                sum(r0 + r, c0 + c) += grid.patches(r * side + c, static_cast<Eigen::Index>(i));
                hits(r0 + r, c0 + c) += 1;
            }
    }
    for (Eigen::Index r = 0; r < height; ++r)
        for (Eigen::Index c = 0; c < width; ++c) {
            if (hits(r, c) == 0)
                throw CoverageError("reassemble: pixel (" + std::to_string(r) + ", " + std::to_string(c) +
                                    ") is not covered by any patch");
            sum(r, c) /= static_cast<double>(hits(r, c));
        }
    return GrayImage(std::move(sum));
}

/// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) in dB.
inline double psnr(const GrayImage& reference, const GrayImage& test, double peak = 255.0) {
    detail::require(reference.width == test.width && reference.height == test.height,
                    "psnr: image dimensions differ");
    const double mse = (reference.pixels - test.pixels).squaredNorm() /
                       static_cast<double>(reference.width * reference.height);
    if (mse == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(peak * peak / mse);
}

inline Eigen::Index measurements_per_patch(double sampling_rate, Eigen::Index n) {
    detail::require(sampling_rate > 0.0 && sampling_rate <= 1.0, "sampling rate must lie in (0, 1]");
    const auto m = static_cast<Eigen::Index>(std::lround(sampling_rate * static_cast<double>(n)));
    detail::require(m >= 1, "sampling rate rounds to zero measurements per patch");
    return m;
}

/**
 * Senses every patch of the grid with its own matrix drawn from
 * rng.derive(patch_index); M = round(rate * side^2).
 */
inline std::vector<PatchMeasurement> sense_image(const GrayImage& image, Eigen::Index patch_side, Eigen::Index stride,
                                                 SensingKind kind, double sampling_rate, const SeededRng& rng) {
    detail::require(kind != SensingKind::Composed, "sense_image: choose gaussian, bernoulli or subsampling");
    const PatchGrid grid = extract_patches(image, patch_side, stride);
    const Eigen::Index n = patch_side * patch_side;
    const Eigen::Index m = measurements_per_patch(sampling_rate, n);
    std::vector<PatchMeasurement> out;
    out.reserve(grid.origins.size());
    for (std::size_t i = 0; i < grid.origins.size(); ++i) {
        SeededRng child = rng.derive(i);
        SensingMatrix phi = kind == SensingKind::GaussianIID ? gaussian_matrix(m, n, child)
                            : kind == SensingKind::Bernoulli ? bernoulli_matrix(m, n, child)
                                                             : subsampling_matrix(m, n, child);
        Eigen::VectorXd y = phi.apply(grid.patches.col(static_cast<Eigen::Index>(i)));
        out.push_back(PatchMeasurement{std::move(y), std::move(phi), i});
    }
    return out;
}

/**
 * Regroups pixel-subsampling measurements taken on `sensed` into one
 * measurement per patch of a grid with `stride`: each new patch observes the
 * sensed pixels that fall inside it, in row-major order.
 */
inline std::vector<PatchMeasurement> regroup_pixel_measurements(std::span<const PatchMeasurement> measurements,
                                                                const ImageGeometry& sensed, Eigen::Index stride) {
    const auto sensed_origins = patch_origins(sensed);
    const Eigen::Index side = sensed.patch_side;
    constexpr double kUnsensed = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd known = Eigen::MatrixXd::Constant(sensed.height, sensed.width, kUnsensed);
    for (const auto& m : measurements) {
        detail::require(m.phi.is_selection(), "overlapped reconstruction needs pixel-subsampling measurements");
        detail::require(m.patch_index < sensed_origins.size(), "measurement patch index outside the sensed grid");
        detail::require(m.phi.cols() == side * side, "measurement dimension differs from the patch size");
        const auto [r0, c0] = sensed_origins[m.patch_index];
        const auto sel = m.phi.selected();
        for (std::size_t j = 0; j < sel.size(); ++j)
            known(r0 + sel[j] / side, c0 + sel[j] % side) = m.y(static_cast<Eigen::Index>(j));
    }
    const ImageGeometry target{sensed.width, sensed.height, side, stride};
    const auto origins = patch_origins(target);
    std::vector<PatchMeasurement> out;
    out.reserve(origins.size());
    std::vector<Eigen::Index> picked;
    std::vector<double> values;
    for (std::size_t i = 0; i < origins.size(); ++i) {
        const auto [r0, c0] = origins[i];
        picked.clear();
        values.clear();
        for (Eigen::Index r = 0; r < side; ++r)
            for (Eigen::Index c = 0; c < side; ++c) {
                const double v = known(r0 + r, c0 + c);
                if (std::isnan(v)) continue;
                picked.push_back(r * side + c);
                values.push_back(v);
            }
        out.push_back(PatchMeasurement{Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())),
                                       SensingMatrix::selection(picked, side * side), i});
    }
    return out;
}

struct ImageReconstruction {
    GrayImage image;
    EmTrace trace;
};

/**
 * MAP-EM decode followed by reassembly and clamping to [0, 255].
 *
 * With `stride == sensed.stride` the measured patches are decoded as they
 * are. A different stride (e.g. 1 for fully overlapped reconstruction)
 * requires pixel-subsampling measurements, which are regrouped per patch of
 * the new grid; overlapping estimates are averaged.
 */
inline ImageReconstruction reconstruct_image(std::span<const PatchMeasurement> measurements,
                                             const ImageGeometry& sensed, Eigen::Index stride,
                                             const EmConfig& config) {
    detail::require(stride >= 1, "reconstruct_image: stride must be positive");
    std::vector<PatchMeasurement> regrouped;
    std::span<const PatchMeasurement> decode_set = measurements;
    ImageGeometry target = sensed;
    if (stride != sensed.stride) {
        regrouped = regroup_pixel_measurements(measurements, sensed, stride);
        decode_set = regrouped;
        target.stride = stride;
    }
    EmResult em = map_em_decode(decode_set, target.patch_side, config);
    PatchGrid grid;
    grid.geometry = target;
    grid.origins = patch_origins(target);
    detail::require(grid.origins.size() == decode_set.size(), "reconstruct_image: measurements do not cover the grid");
    grid.patches.resize(target.patch_side * target.patch_side, static_cast<Eigen::Index>(grid.origins.size()));
    for (std::size_t i = 0; i < decode_set.size(); ++i) {
        detail::require(decode_set[i].patch_index < grid.origins.size(), "reconstruct_image: patch index out of range");
        grid.patches.col(static_cast<Eigen::Index>(decode_set[i].patch_index)) = em.estimates.col(static_cast<Eigen::Index>(i));
    }
    GrayImage image = reassemble(grid, target.width, target.height);
    image.pixels = image.pixels.cwiseMax(0.0).cwiseMin(255.0);
    return ImageReconstruction{std::move(image), std::move(em.trace)};
}

}  // namespace scs
