#pragma once

// Command-line front end. `run` is the whole program and can be called
// in-process; tools/scs_main.cpp only forwards argv to it.
//
// Every command writes its primary output to --out (stdout when omitted for
// the tabular commands) and, when --out is given, a sidecar <out>.json that
// echoes the validated configuration. Exit codes: 0 success, 2 argument
// error (usage printed), 1 runtime error (one-line diagnostic).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scs/analysis.hpp"
#include "scs/errors.hpp"
#include "scs/gmm.hpp"
#include "scs/imaging.hpp"
#include "scs/serialization.hpp"

namespace scs::cli {

using nlohmann::json;

namespace detail {

using scs::detail::require;

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream is(text);
    while (std::getline(is, part, sep)) parts.push_back(part);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

inline double parse_real(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == s.size() && !s.empty() && std::isfinite(v), "not a number: '" + s + "'");
    return v;
}

}  // namespace detail

/// "a:b:step" (inclusive of b when it lies on the grid), "a,b,c" or a single value.
inline std::vector<double> parse_real_range(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = detail::split(text, ':');
        detail::require(parts.size() == 3, "range must be a:b:step, got '" + text + "'");
        const double a = detail::parse_real(parts[0]);
        const double b = detail::parse_real(parts[1]);
        const double step = detail::parse_real(parts[2]);
        detail::require(step > 0.0 && b >= a, "range needs step > 0 and b >= a, got '" + text + "'");
        const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
        detail::require(count <= 1000000, "range has too many points: '" + text + "'");
        for (std::size_t i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
        return out;
    }
    for (const auto& p : detail::split(text, ',')) out.push_back(detail::parse_real(p));
    detail::require(!out.empty(), "empty range");
    return out;
}

inline std::vector<Eigen::Index> parse_index_range(const std::string& text) {
    std::vector<Eigen::Index> out;
    for (double v : parse_real_range(text)) {
        detail::require(v == std::floor(v) && std::abs(v) < 1e15, "expected integers in range '" + text + "'");
        out.push_back(static_cast<Eigen::Index>(v));
    }
    return out;
}

struct Options {
    std::string command;
    std::uint64_t seed = 1;
    std::optional<std::size_t> trials;
    Eigen::Index n = 64;
    std::optional<std::string> k;
    std::string alpha = "3";
    std::string matrix = "gaussian";
    std::string image_matrix = "subsample";
    double rate = 0.25;
    std::size_t components = 20;
    std::size_t iters = 5;
    std::optional<Eigen::Index> stride;
    std::string in;
    std::string out;
    unsigned threads = 1;
};

namespace detail {

inline void write_outputs(const Options& opt, const std::string& body, const json& sidecar, std::ostream& out) {
    if (opt.out.empty()) {
        out << body;
        return;
    }
    {
        std::ofstream f(opt.out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file " + opt.out);
        f << body;
        if (!f) throw std::runtime_error("failed writing output file " + opt.out);
    }
    std::ofstream f(opt.out + ".json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot open sidecar file " + opt.out + ".json");
    f << sidecar.dump(2) << '\n';
}

inline json base_config(const Options& opt) {
    return json{{"command", opt.command}, {"seed", opt.seed}, {"threads", opt.threads}};
}

inline json trace_to_json(const EmTrace& trace) {
    json records = json::array();
    for (const auto& r : trace.records)
        records.push_back({{"iteration", r.iteration},
                           {"total_log_posterior", r.total_log_posterior},
                           {"assignment_changes", r.assignment_changes},
                           {"flagged_patches", r.flagged_patches}});
    return json{{"records", records}, {"log_posterior_non_decreasing", trace.log_posterior_non_decreasing()}};
}

inline SensingKind image_sensing_kind(const std::string& matrix) {
    const MatrixKind kind = matrix_kind_from_string(matrix);
    switch (kind) {
        case MatrixKind::Gaussian: return SensingKind::GaussianIID;
        case MatrixKind::Bernoulli: return SensingKind::Bernoulli;
        case MatrixKind::SubsampledDct: return SensingKind::Subsampling;
    }
    throw ArgumentError("unknown matrix kind");
}

inline Parallelism parallelism(const Options& opt) { return Parallelism{opt.threads}; }

inline int cmd_fig1(const Options& opt, std::ostream& out) {
    const auto alphas = parse_real_range(opt.alpha);
    const MatrixKind kind = matrix_kind_from_string(opt.matrix);
    const std::size_t trials = opt.trials.value_or(ExperimentDefaults::kCurveTrials);
    RatioCurve curve;
    json cfg = base_config(opt);
    if (alphas.size() == 1) {
        const auto ks = parse_index_range(opt.k.value_or("2:32:2"));
        curve = ratio_vs_k(opt.n, alphas[0], ks, trials, kind, SeededRng(opt.seed), parallelism(opt));
        cfg["sweep"] = "k";
        cfg["k"] = ks;
    } else {
        const auto ks = parse_index_range(opt.k.value_or("10"));
        require(ks.size() == 1, "fig1: sweep either k or alpha, not both");
        curve = ratio_vs_alpha(opt.n, ks[0], alphas, trials, kind, SeededRng(opt.seed), parallelism(opt));
        cfg["sweep"] = "alpha";
        cfg["k"] = ks[0];
    }
    cfg["alpha"] = alphas;
    cfg["n"] = opt.n;
    cfg["trials"] = trials;
    cfg["matrix"] = to_string(kind);
    cfg["measurements"] = "M = k";
    cfg["notes"] = curve.notes;
    std::ostringstream csv;
    write_ratio_csv(curve, csv);
    write_outputs(opt, csv.str(), cfg, out);
    return 0;
}

/// C0 over k with M = k, closed form.
inline int cmd_fig2(const Options& opt, std::ostream& out) {
    const auto alphas = parse_real_range(opt.alpha);
    require(alphas.size() == 1, "fig2: --alpha takes a single value");
    const auto ks = parse_index_range(opt.k.value_or("2:32:2"));
    const MatrixKind kind = matrix_kind_from_string(opt.matrix);
    const std::size_t trials = opt.trials.value_or(ExperimentDefaults::kConstantTrials);
    const SpectralGaussian model = SpectralGaussian::diagonal(power_decay_spectrum(opt.n, alphas[0]));
    const SeededRng rng(opt.seed);
    std::ostringstream csv;
    csv << "k,a_k,b_k,c0\n";
    for (Eigen::Index k : ks) {
        require(k >= 1 && k < opt.n, "fig2: k must satisfy 1 <= k < N");
        const RipExpectationReport r =
            rip_expectation_constants(model, MatrixSource::random(kind, k, opt.n), k, trials,
                                      rng.derive(static_cast<std::uint64_t>(k)), ConstantMethod::ClosedForm,
                                      parallelism(opt));
        csv << k << ',' << format_g9(r.a_k) << ',' << format_g9(r.b_k) << ',' << format_g9(r.c0) << '\n';
    }
    json cfg = base_config(opt);
    cfg["n"] = opt.n;
    cfg["alpha"] = alphas[0];
    cfg["k"] = ks;
    cfg["trials"] = trials;
    cfg["matrix"] = to_string(kind);
    cfg["method"] = to_string(ConstantMethod::ClosedForm);
    cfg["measurements"] = "M = k";
    write_outputs(opt, csv.str(), cfg, out);
    return 0;
}

/// Both estimators of the RIP-in-expectation constants plus the null-space identity at one k.
inline int cmd_rip(const Options& opt, std::ostream& out) {
    const auto alphas = parse_real_range(opt.alpha);
    require(alphas.size() == 1, "rip: --alpha takes a single value");
    const auto ks = parse_index_range(opt.k.value_or("10"));
    require(ks.size() == 1, "rip: --k takes a single value");
    const Eigen::Index k = ks[0];
    require(k >= 1 && k < opt.n, "rip: k must satisfy 1 <= k < N");
    const MatrixKind kind = matrix_kind_from_string(opt.matrix);
    const std::size_t trials = opt.trials.value_or(ExperimentDefaults::kConstantTrials);
    const SpectralGaussian model = SpectralGaussian::diagonal(power_decay_spectrum(opt.n, alphas[0]));
    const MatrixSource source = MatrixSource::random(kind, k, opt.n);
    const SeededRng rng(opt.seed);
    std::ostringstream csv;
    csv << "k,method,a_k,b_k,c0,error_energy,tail_energy\n";
    for (ConstantMethod method : {ConstantMethod::ClosedForm, ConstantMethod::MonteCarlo}) {
        const RipExpectationReport r = rip_expectation_constants(
            model, source, k, trials, rng.derive(method == ConstantMethod::ClosedForm ? 0 : 1), method,
            parallelism(opt));
        csv << k << ',' << to_string(method) << ',' << format_g9(r.a_k) << ',' << format_g9(r.b_k) << ','
            << format_g9(r.c0) << ',' << format_g9(r.error_energy) << ',' << format_g9(r.tail_energy) << '\n';
    }
    const NullSpaceCheck ns = null_space_equality_check(model, source, k, trials, rng.derive(2), parallelism(opt));
    json cfg = base_config(opt);
    cfg["n"] = opt.n;
    cfg["alpha"] = alphas[0];
    cfg["k"] = k;
    cfg["trials"] = trials;
    cfg["matrix"] = to_string(kind);
    cfg["measurements"] = "M = k";
    cfg["null_space"] = {{"lhs", ns.lhs}, {"rhs", ns.rhs}, {"c0", ns.c0}, {"degenerate", ns.degenerate}};
    write_outputs(opt, csv.str(), cfg, out);
    return 0;
}

inline int cmd_decay(const Options& opt, std::ostream& out) {
    const auto alphas = parse_real_range(opt.alpha);
    require(alphas.size() == 1, "decay: --alpha takes a single value");
    const auto ks = parse_index_range(opt.k.value_or("10"));
    require(ks.size() == 1, "decay: --k takes a single value");
    const MatrixKind kind = matrix_kind_from_string(opt.matrix);
    const std::size_t trials = opt.trials.value_or(ExperimentDefaults::kConstantTrials);
    const SpectralGaussian model = SpectralGaussian::diagonal(power_decay_spectrum(opt.n, alphas[0]));
    const DecayProfile p = error_decay_profile(model, MatrixSource::random(kind, ks[0], opt.n), trials,
                                               SeededRng(opt.seed), parallelism(opt));
    std::ostringstream csv;
    csv << "n,mean_abs_error,stderr\n";
    for (Eigen::Index i = 0; i < p.mean_abs_error.size(); ++i)
        csv << i + 1 << ',' << format_g9(p.mean_abs_error(i)) << ',' << format_g9(p.stderr_(i)) << '\n';
    json cfg = base_config(opt);
    cfg["n"] = opt.n;
    cfg["alpha"] = alphas[0];
    cfg["k"] = ks[0];
    cfg["trials"] = trials;
    cfg["matrix"] = to_string(kind);
    cfg["measurements"] = "M = k";
    cfg["monotone"] = p.monotone;
    std::vector<Eigen::Index> violations;
    for (Eigen::Index v : p.violations) violations.push_back(v + 1);
    cfg["violations"] = violations;
    cfg["excluded"] = p.excluded;
    write_outputs(opt, csv.str(), cfg, out);
    return 0;
}

inline json geometry_to_json(const ImageGeometry& g) {
    return json{{"width", g.width}, {"height", g.height}, {"patch_side", g.patch_side}, {"stride", g.stride}};
}

inline ImageGeometry geometry_from_json(const json& j) {
    try {
        return ImageGeometry{j.at("width").get<Eigen::Index>(), j.at("height").get<Eigen::Index>(),
                             j.at("patch_side").get<Eigen::Index>(), j.at("stride").get<Eigen::Index>()};
    } catch (const json::exception& e) {
        throw FormatError(std::string("measurement sidecar lacks image geometry: ") + e.what(), 0);
    }
}

inline EmConfig em_config(const Options& opt) {
    EmConfig cfg;
    cfg.components = opt.components;
    cfg.max_iters = opt.iters;
    cfg.parallelism = parallelism(opt);
    return cfg;
}

inline void require_image_flags(const Options& opt) {
    require(opt.components >= 1, "--components must be positive");
    require(opt.iters >= 1, "--iters must be positive");
    require(opt.rate > 0.0 && opt.rate <= 1.0, "--rate must lie in (0, 1]");
    if (opt.stride) require(*opt.stride >= 1, "--stride must be positive");
}

inline int cmd_sense(const Options& opt, std::ostream& out) {
    require_image_flags(opt);
    const SensingKind kind = image_sensing_kind(opt.image_matrix);
    const GrayImage image = read_pgm(opt.in);
    const ImageGeometry g{image.width, image.height, 8, opt.stride.value_or(8)};
    const auto meas = sense_image(image, g.patch_side, g.stride, kind, opt.rate, SeededRng(opt.seed));
    std::ostringstream body;
    write_measurements_jsonl(meas, body);
    json cfg = base_config(opt);
    cfg["in"] = opt.in;
    cfg["matrix"] = to_string(kind);
    cfg["rate"] = opt.rate;
    cfg["measurements_per_patch"] = measurements_per_patch(opt.rate, g.patch_side * g.patch_side);
    cfg["patches"] = meas.size();
    cfg["geometry"] = geometry_to_json(g);
    write_outputs(opt, body.str(), cfg, out);
    return 0;
}

inline int cmd_decode(const Options& opt, std::ostream&) {
    require_image_flags(opt);
    require(!opt.out.empty(), "decode: --out is required");
    std::ifstream sidecar(opt.in + ".json", std::ios::binary);
    if (!sidecar) throw std::runtime_error("missing measurement sidecar " + opt.in + ".json");
    json meta;
    try {
        meta = json::parse(sidecar);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("measurement sidecar is not JSON: ") + e.what(), e.byte);
    }
    const ImageGeometry g = geometry_from_json(meta.value("geometry", json::object()));
    std::ifstream in(opt.in, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + opt.in);
    const auto meas = read_measurements_jsonl(in);
    const Eigen::Index stride = opt.stride.value_or(g.stride);
    const ImageReconstruction rec = reconstruct_image(meas, g, stride, em_config(opt));
    const auto bytes = encode_pgm(rec.image);
    json cfg = base_config(opt);
    cfg["in"] = opt.in;
    cfg["components"] = opt.components;
    cfg["iters"] = opt.iters;
    cfg["stride"] = stride;
    cfg["geometry"] = geometry_to_json(g);
    cfg["trace"] = trace_to_json(rec.trace);
    write_outputs(opt, std::string(bytes.begin(), bytes.end()), cfg, std::cout);
    return 0;
}

/// Sense, decode and score one image.
inline int cmd_roundtrip(const Options& opt, std::ostream& out) {
    require_image_flags(opt);
    const SensingKind kind = image_sensing_kind(opt.image_matrix);
    const GrayImage image = read_pgm(opt.in);
    const ImageGeometry g{image.width, image.height, 8, 8};
    const auto meas = sense_image(image, g.patch_side, g.stride, kind, opt.rate, SeededRng(opt.seed));
    const Eigen::Index stride = opt.stride.value_or(g.stride);
    const ImageReconstruction rec = reconstruct_image(meas, g, stride, em_config(opt));
    const double score = psnr(image, rec.image);
    json cfg = base_config(opt);
    cfg["in"] = opt.in;
    cfg["matrix"] = to_string(kind);
    cfg["rate"] = opt.rate;
    cfg["components"] = opt.components;
    cfg["iters"] = opt.iters;
    cfg["stride"] = stride;
    cfg["geometry"] = geometry_to_json(g);
    cfg["psnr_db"] = std::isinf(score) ? json("inf") : json(score);
    cfg["trace"] = trace_to_json(rec.trace);
    if (opt.out.empty()) {
        out << "psnr_db," << (std::isinf(score) ? std::string("inf") : format_g9(score)) << '\n';
        return 0;
    }
    const auto bytes = encode_pgm(rec.image);
    write_outputs(opt, std::string(bytes.begin(), bytes.end()), cfg, out);
    return 0;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Options opt;
    CLI::App app{"Statistical compressive sensing experiments", "scs"};
    app.require_subcommand(1);

    auto add_seed = [&](CLI::App* c) {
        c->add_option("--seed", opt.seed, "64-bit seed")->capture_default_str();
        c->add_option("--threads", opt.threads, "worker threads (1 keeps runs byte-identical)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    };
    auto add_model = [&](CLI::App* c, const char* k_help) {
        c->add_option("--trials", opt.trials, "matrix draws (or signals) per point");
        c->add_option("--n", opt.n, "signal dimension")->check(CLI::PositiveNumber)->capture_default_str();
        c->add_option("--k", opt.k, k_help);
        c->add_option("--alpha", opt.alpha, "power-decay exponent (value, list or a:b:step)")->capture_default_str();
        c->add_option("--matrix", opt.matrix, "gaussian | bernoulli | subsample")
            ->check(CLI::IsMember({"gaussian", "bernoulli", "subsample"}))
            ->capture_default_str();
        c->add_option("--out", opt.out, "CSV output path (stdout when omitted)");
        add_seed(c);
    };
    auto add_em = [&](CLI::App* c) {
        c->add_option("--components", opt.components, "mixture components")->capture_default_str();
        c->add_option("--iters", opt.iters, "maximum MAP-EM iterations")->capture_default_str();
        c->add_option("--stride", opt.stride, "reconstruction stride (1 = fully overlapped)");
    };
    auto add_image = [&](CLI::App* c) {
        c->add_option("--rate", opt.rate, "sampling rate M/N")->capture_default_str();
        c->add_option("--matrix", opt.image_matrix, "gaussian | bernoulli | subsample (pixels)")
            ->check(CLI::IsMember({"gaussian", "bernoulli", "subsample"}))
            ->capture_default_str();
    };

    auto* fig1 = app.add_subcommand("fig1", "MSE ratio to the best k-term error over k (or over alpha)");
    add_model(fig1, "k values, default 2:32:2 (10 for an alpha sweep)");
    auto* fig2 = app.add_subcommand("fig2", "C0 = 1 + b_K/a_K over k with M = k");
    add_model(fig2, "k values, default 2:32:2");
    auto* rip = app.add_subcommand("rip", "RIP-in-expectation constants and the null-space identity at one k");
    add_model(rip, "k, default 10");
    auto* decay = app.add_subcommand("decay", "E|eta[n]| profile and its monotone-decay flag");
    add_model(decay, "k (= M), default 10");

    auto* sense = app.add_subcommand("sense", "sense an 8-bit PGM image patch by patch into JSON lines");
    sense->add_option("--in", opt.in, "input PGM")->required()->check(CLI::ExistingFile);
    sense->add_option("--out", opt.out, "measurement output (stdout when omitted)");
    sense->add_option("--stride", opt.stride, "sensing stride, default 8 (non-overlapped)");
    add_image(sense);
    add_seed(sense);

    auto* decode = app.add_subcommand("decode", "MAP-EM reconstruction of sensed measurements into a PGM");
    decode->add_option("--in", opt.in, "measurements written by `sense`")->required()->check(CLI::ExistingFile);
    decode->add_option("--out", opt.out, "output PGM")->required();
    add_em(decode);
    add_seed(decode);

    auto* roundtrip = app.add_subcommand("roundtrip", "sense, reconstruct and score an image");
    roundtrip->add_option("--in", opt.in, "input PGM")->required()->check(CLI::ExistingFile);
    roundtrip->add_option("--out", opt.out, "output PGM (prints the PSNR only when omitted)");
    add_image(roundtrip);
    add_em(roundtrip);
    add_seed(roundtrip);

    std::vector<const char*> argv{"scs"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 2;
    }
    CLI::App* chosen = app.get_subcommands().front();
    opt.command = chosen->get_name();
    try {
        if (chosen == fig1) return detail::cmd_fig1(opt, out);
        if (chosen == fig2) return detail::cmd_fig2(opt, out);
        if (chosen == rip) return detail::cmd_rip(opt, out);
        if (chosen == decay) return detail::cmd_decay(opt, out);
        if (chosen == sense) return detail::cmd_sense(opt, out);
        if (chosen == decode) return detail::cmd_decode(opt, out);
        return detail::cmd_roundtrip(opt, out);
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n\n" << chosen->help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace scs::cli
