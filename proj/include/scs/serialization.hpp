#pragma once

// JSON layouts used for persistence. Matrices are row-major flat arrays.
//
//   Spectrum          {"dim", "eigenvalues"}
//   SpectralGaussian  {"dim", "mean", "eigenvalues", "basis"}
//   SensingMatrix     {"rows", "cols", "kind", "entries"}
//   Basis             {"rows", "cols", "kind", "entries"}
//   GmmModel          {"patch_dim", "components": [{"weight", <SpectralGaussian fields>}]}
//   PatchMeasurement  {"patch_index", "y", "phi": <SensingMatrix>}  (one per line in .jsonl)

#include <Eigen/Dense>

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "scs/errors.hpp"
#include "scs/gaussian_model.hpp"
#include "scs/gmm.hpp"
#include "scs/sensing.hpp"

namespace scs {

using nlohmann::json;

namespace detail {

inline json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Eigen::VectorXd vector_from_json(const json& j, const char* field) {
    if (!j.is_array()) throw ArgumentError(std::string("JSON: '") + field + "' must be an array");
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return json(flat);
}

inline Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* field) {
    const Eigen::VectorXd flat = vector_from_json(j, field);
    if (flat.size() != rows * cols)
        throw ArgumentError(std::string("JSON: '") + field + "' has " + std::to_string(flat.size()) +
                            " entries, expected " + std::to_string(rows * cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat(r * cols + c);
    return m;
}

inline const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw ArgumentError(std::string("JSON: missing field '") + name + "'");
    return j.at(name);
}

}  // namespace detail

inline json to_json(const Spectrum& s) {
    return json{{"dim", s.dim()}, {"eigenvalues", detail::vector_to_json(s.eigenvalues())}};
}

inline Spectrum spectrum_from_json(const json& j) {
    Eigen::VectorXd values = detail::vector_from_json(detail::field(j, "eigenvalues"), "eigenvalues");
    if (j.contains("dim") && j.at("dim").get<Eigen::Index>() != values.size())
        throw ArgumentError("JSON: spectrum 'dim' disagrees with eigenvalue count");
    return Spectrum(std::move(values));
}

inline json to_json(const SpectralGaussian& g) {
    return json{{"dim", g.dim()},
                {"mean", detail::vector_to_json(g.mean())},
                {"eigenvalues", detail::vector_to_json(g.eigenvalues())},
                {"basis", detail::matrix_to_json(g.basis())}};
}

inline SpectralGaussian spectral_gaussian_from_json(const json& j) {
    const auto n = detail::field(j, "dim").get<Eigen::Index>();
    return SpectralGaussian(detail::vector_from_json(detail::field(j, "mean"), "mean"),
                            detail::matrix_from_json(detail::field(j, "basis"), n, n, "basis"),
                            detail::vector_from_json(detail::field(j, "eigenvalues"), "eigenvalues"));
}

inline json to_json(const SensingMatrix& phi) {
    return json{{"rows", phi.rows()},
                {"cols", phi.cols()},
                {"kind", std::string(to_string(phi.kind()))},
                {"entries", detail::matrix_to_json(phi.dense())}};
}

inline SensingMatrix sensing_matrix_from_json(const json& j) {
    const auto rows = detail::field(j, "rows").get<Eigen::Index>();
    const auto cols = detail::field(j, "cols").get<Eigen::Index>();
    const SensingKind kind = sensing_kind_from_string(detail::field(j, "kind").get<std::string>());
    Eigen::MatrixXd entries = detail::matrix_from_json(detail::field(j, "entries"), rows, cols, "entries");
    if (kind == SensingKind::Subsampling && rows == 0) return SensingMatrix::selection({}, cols);
    return SensingMatrix::from_dense(std::move(entries), kind);
}

inline json to_json(const Basis& b) {
    return json{{"rows", b.dim()},
                {"cols", b.dim()},
                {"kind", std::string(to_string(b.kind()))},
                {"entries", detail::matrix_to_json(b.entries())}};
}

inline Basis basis_from_json(const json& j) {
    const auto rows = detail::field(j, "rows").get<Eigen::Index>();
    const auto cols = detail::field(j, "cols").get<Eigen::Index>();
    return Basis(detail::matrix_from_json(detail::field(j, "entries"), rows, cols, "entries"),
                 basis_kind_from_string(detail::field(j, "kind").get<std::string>()));
}

inline json to_json(const GmmModel& gmm) {
    json components = json::array();
    for (std::size_t k = 0; k < gmm.size(); ++k) {
        json c = to_json(gmm.component(k));
        c["weight"] = gmm.weight(k);
        components.push_back(std::move(c));
    }
    return json{{"patch_dim", gmm.patch_dim()}, {"components", std::move(components)}};
}

inline GmmModel gmm_from_json(const json& j) {
    std::vector<SpectralGaussian> components;
    std::vector<double> weights;
    for (const auto& c : detail::field(j, "components")) {
        components.push_back(spectral_gaussian_from_json(c));
        weights.push_back(detail::field(c, "weight").get<double>());
    }
    GmmModel gmm(std::move(components), std::move(weights));
    if (detail::field(j, "patch_dim").get<Eigen::Index>() != gmm.patch_dim())
        throw ArgumentError("JSON: 'patch_dim' disagrees with the component dimension");
    return gmm;
}

inline json to_json(const PatchMeasurement& m) {
    return json{{"patch_index", m.patch_index}, {"y", detail::vector_to_json(m.y)}, {"phi", to_json(m.phi)}};
}

inline PatchMeasurement patch_measurement_from_json(const json& j) {
    PatchMeasurement m{detail::vector_from_json(detail::field(j, "y"), "y"),
                       sensing_matrix_from_json(detail::field(j, "phi")),
                       detail::field(j, "patch_index").get<std::size_t>()};
    if (m.y.size() != m.phi.rows()) throw ArgumentError("JSON: measurement length differs from matrix rows");
    return m;
}

inline void write_measurements_jsonl(std::span<const PatchMeasurement> measurements, std::ostream& os) {
    for (const auto& m : measurements) os << to_json(m).dump() << '\n';
}

inline std::vector<PatchMeasurement> read_measurements_jsonl(std::istream& is) {
    std::vector<PatchMeasurement> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(patch_measurement_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ArgumentError("measurements line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace scs
