#include "toeplab/experiments.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "toeplab/version.hpp"

namespace toeplab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(i) for i in [0, count) across `workers` threads. fn must write only
/// to its own slot; results are then independent of scheduling.
template <typename Fn>
void parallel_for_indices(std::size_t count, int workers, Fn&& fn) {
    if (workers < 1) workers = 1;
    if (count > 0 && static_cast<std::size_t>(workers) > count) {
        workers = static_cast<int>(count);
    }
    std::atomic<std::size_t> next{0};
    auto body = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
}

EnsembleKind route_kind(MatrixRoute route) {
    switch (route) {
        case MatrixRoute::Complex:
        case MatrixRoute::Fourier:
            return EnsembleKind::ComplexHermitian;
        case MatrixRoute::Real:
        case MatrixRoute::SubPlus:
        case MatrixRoute::SubMinus:
            return EnsembleKind::RealSymmetric;
    }
    throw std::logic_error("route_kind: unknown route");
}

DenseHermitianMatrix build_route_matrix(MatrixRoute route, const CoefficientVector& coeffs) {
    switch (route) {
        case MatrixRoute::Complex:
        case MatrixRoute::Real:
            return build_toeplitz(coeffs);
        case MatrixRoute::SubPlus:
            return build_subspectrum_matrices(coeffs).first;
        case MatrixRoute::SubMinus:
            return build_subspectrum_matrices(coeffs).second;
        case MatrixRoute::Fourier:
            return build_fourier_matrix(coeffs);
    }
    throw std::logic_error("build_route_matrix: unknown route");
}

std::string utc_now_string() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open output file " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

std::string csv_cell(double v) { return format_double(v); }

std::string histogram_csv(const HistogramEstimate& hist, const ReferenceLaw* law) {
    std::string out = "value,estimate,std_error,reference\n";
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        const double c = hist.center(i);
        out += csv_cell(c);
        out += ',';
        out += csv_cell(hist.density[i]);
        out += ',';
        out += csv_cell(hist.std_error[i]);
        out += ',';
        if (law != nullptr) out += csv_cell(evaluate_law(*law, c));
        out += '\n';
    }
    return out;
}

std::string formfactor_csv(const FormFactorEstimate& ff, const ReferenceLaw& law) {
    std::string out = "value,estimate,std_error,reference\n";
    for (std::size_t i = 0; i < ff.tau_grid.size(); ++i) {
        out += csv_cell(ff.tau_grid[i]);
        out += ',';
        out += csv_cell(ff.k_values[i]);
        out += ",,";  // per-tau errors are not tracked by the estimator
        out += csv_cell(evaluate_law(law, ff.tau_grid[i]));
        out += '\n';
    }
    return out;
}

std::string fit_csv(const std::vector<std::string>& names, const FitResult& fit) {
    std::string out;
    for (const auto& n : names) {
        out += n;
        out += ',';
    }
    out += "residual_norm,converged\n";
    for (const double p : fit.parameters) {
        out += csv_cell(p);
        out += ',';
    }
    out += csv_cell(fit.residual_norm);
    out += ',';
    out += fit.converged ? "1" : "0";
    out += '\n';
    return out;
}

/// Artifact writer that records a digest for every file it emits.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    void emit(const std::string& name, const std::string& content) {
        const fs::path path = dir_ / name;
        write_text_file(path, content);
        digests_.push_back({name, sha256_file(path)});
    }

    std::vector<ArtifactDigest> digests() const { return digests_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<ArtifactDigest> digests_;
};

void enforce_failure_budget(const std::vector<RealizationFailure>& failures,
                            std::size_t realizations) {
    if (static_cast<double>(failures.size()) > 0.01 * static_cast<double>(realizations)) {
        std::ostringstream os;
        os << "aborting: " << failures.size() << " of " << realizations
           << " realizations failed (>1%)";
        if (!failures.empty()) {
            os << "; first: " << failures.front().message;
        }
        throw std::runtime_error(os.str());
    }
}

ReferenceLaw spacing_law(LawFamily family, int n) {
    return ReferenceLaw{family, Observable::SpacingPn, n};
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["preset"] = to_string(c.preset);
    j["ensemble"] = to_string(c.ensemble);
    j["n_dim"] = c.n_dim;
    j["realizations"] = c.realizations;
    j["master_seed"] = c.master_seed;
    j["retained_fraction"] = c.retained_fraction;
    j["poly_degree"] = c.poly_degree;
    j["spacing_bin_width"] = c.spacing_bin_width;
    j["spacing_max"] = c.spacing_max;
    j["ratio_bin_width"] = c.ratio_bin_width;
    j["ratio_max"] = c.ratio_max;
    j["tau_step"] = c.tau_step;
    j["tau_max"] = c.tau_max;
    j["density_bin_width"] = c.density_bin_width;
    j["fractal_sizes"] = c.fractal_sizes;
    j["fractal_q"] = c.fractal_q;
    j["variance_samples"] = c.variance_samples;
    j["workers"] = c.workers;
    j["output_dir"] = c.output_dir;
    j["paper_scale"] = c.paper_scale;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.preset = preset_from_string(j.at("preset").get<std::string>());
    c.ensemble = route_from_string(j.at("ensemble").get<std::string>());
    c.n_dim = j.at("n_dim").get<int>();
    c.realizations = j.at("realizations").get<std::size_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.retained_fraction = j.at("retained_fraction").get<double>();
    c.poly_degree = j.at("poly_degree").get<int>();
    c.spacing_bin_width = j.at("spacing_bin_width").get<double>();
    c.spacing_max = j.at("spacing_max").get<double>();
    c.ratio_bin_width = j.at("ratio_bin_width").get<double>();
    c.ratio_max = j.at("ratio_max").get<double>();
    c.tau_step = j.at("tau_step").get<double>();
    c.tau_max = j.at("tau_max").get<double>();
    c.density_bin_width = j.at("density_bin_width").get<double>();
    c.fractal_sizes = j.at("fractal_sizes").get<std::vector<int>>();
    c.fractal_q = j.at("fractal_q").get<std::vector<double>>();
    c.variance_samples = j.at("variance_samples").get<std::size_t>();
    c.workers = j.at("workers").get<int>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.paper_scale = j.at("paper_scale").get<bool>();
    return c;
}

}  // namespace

std::string to_string(Preset preset) {
    switch (preset) {
        case Preset::Fig1Spacings: return "fig1-spacings";
        case Preset::Fig2RatioFormfactor: return "fig2-ratio-formfactor";
        case Preset::Fig3RealSpacings: return "fig3-real-spacings";
        case Preset::Fig4RealRatio: return "fig4-real-ratio";
        case Preset::Subspectra: return "subspectra";
        case Preset::FractalDimensions: return "fractal-dimensions";
        case Preset::DensityRho: return "density-rho";
        case Preset::VarianceCheck: return "variance-check";
        case Preset::Custom: return "custom";
    }
    throw std::logic_error("to_string: unknown preset");
}

std::string to_string(MatrixRoute route) {
    switch (route) {
        case MatrixRoute::Complex: return "complex";
        case MatrixRoute::Real: return "real";
        case MatrixRoute::SubPlus: return "sub-plus";
        case MatrixRoute::SubMinus: return "sub-minus";
        case MatrixRoute::Fourier: return "fourier";
    }
    throw std::logic_error("to_string: unknown route");
}

Preset preset_from_string(const std::string& name) {
    for (const Preset p :
         {Preset::Fig1Spacings, Preset::Fig2RatioFormfactor, Preset::Fig3RealSpacings,
          Preset::Fig4RealRatio, Preset::Subspectra, Preset::FractalDimensions,
          Preset::DensityRho, Preset::VarianceCheck, Preset::Custom}) {
        if (to_string(p) == name) return p;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

MatrixRoute route_from_string(const std::string& name) {
    for (const MatrixRoute r : {MatrixRoute::Complex, MatrixRoute::Real, MatrixRoute::SubPlus,
                                MatrixRoute::SubMinus, MatrixRoute::Fourier}) {
        if (to_string(r) == name) return r;
    }
    throw std::invalid_argument("unknown ensemble: " + name);
}

ExperimentConfig preset_config(Preset preset) {
    ExperimentConfig c;
    c.preset = preset;
    switch (preset) {
        case Preset::Fig1Spacings:
            c.ensemble = MatrixRoute::Complex;
            c.output_dir = "out/fig1-spacings";
            break;
        case Preset::Fig2RatioFormfactor:
            c.ensemble = MatrixRoute::Complex;
            c.output_dir = "out/fig2-ratio-formfactor";
            break;
        case Preset::Fig3RealSpacings:
            c.ensemble = MatrixRoute::Real;
            c.output_dir = "out/fig3-real-spacings";
            break;
        case Preset::Fig4RealRatio:
            c.ensemble = MatrixRoute::Real;
            c.output_dir = "out/fig4-real-ratio";
            break;
        case Preset::Subspectra:
            c.ensemble = MatrixRoute::Real;  // both half-spectra are derived from real draws
            c.output_dir = "out/subspectra";
            break;
        case Preset::FractalDimensions:
            c.ensemble = MatrixRoute::Complex;
            c.realizations = 200;
            c.output_dir = "out/fractal-dimensions";
            break;
        case Preset::DensityRho:
            c.ensemble = MatrixRoute::Real;
            c.output_dir = "out/density-rho";
            break;
        case Preset::VarianceCheck:
            c.ensemble = MatrixRoute::Complex;
            c.n_dim = 32;
            c.output_dir = "out/variance-check";
            break;
        case Preset::Custom:
            break;
    }
    return c;
}

void apply_paper_scale(ExperimentConfig& config) {
    config.paper_scale = true;
    switch (config.preset) {
        case Preset::Fig1Spacings:
        case Preset::Fig2RatioFormfactor:
        case Preset::Fig3RealSpacings:
        case Preset::Fig4RealRatio:
        case Preset::Subspectra:
        case Preset::DensityRho:
            config.realizations = 10000;
            break;
        case Preset::FractalDimensions:
            config.realizations = 1000;
            break;
        case Preset::VarianceCheck:
        case Preset::Custom:
            break;
    }
}

std::string serialize_config(const ExperimentConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& json_text) {
    return config_from_json(json::parse(json_text));
}

std::string serialize_manifest(const RunManifest& manifest) {
    json j;
    j["config"] = config_to_json(manifest.config);
    j["artifacts"] = json::array();
    for (const auto& a : manifest.artifacts) {
        j["artifacts"].push_back({{"file", a.file}, {"sha256", a.sha256}});
    }
    j["failed_realizations"] = json::array();
    for (const auto& f : manifest.failures) {
        j["failed_realizations"].push_back(
            {{"realization_index", f.realization_index}, {"message", f.message}});
    }
    j["started_utc"] = manifest.started_utc;
    j["elapsed_seconds"] = manifest.elapsed_seconds;
    j["library_version"] = manifest.library_version;
    return j.dump(2) + "\n";
}

std::string format_double(double value) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("sha256_file: cannot open " + path.string());
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256_file: digest init failed");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

Pool run_pool(MatrixRoute route, const ExperimentConfig& config, bool want_vectors,
              bool want_unfolded) {
    const std::size_t count = config.realizations;
    const EnsembleKind kind = route_kind(route);
    std::vector<std::optional<SpectrumRecord>> records(count);
    std::vector<std::optional<UnfoldedSpectrum>> unfolded(count);
    std::vector<std::optional<RealizationFailure>> failures(count);

    parallel_for_indices(count, resolve_workers(config.workers), [&](std::size_t i) {
        const EnsembleSpec spec{kind, config.n_dim, config.master_seed, i};
        try {
            const CoefficientVector coeffs = sample_coefficients(spec);
            const DenseHermitianMatrix matrix = build_route_matrix(route, coeffs);
            SpectrumRecord record = eigendecompose(matrix, want_vectors, spec);
            if (want_unfolded) {
                unfolded[i] = unfold(record, config.retained_fraction, config.poly_degree);
            }
            records[i] = std::move(record);
        } catch (const std::exception& e) {
            failures[i] = RealizationFailure{i, e.what()};
        }
    });

    Pool pool;
    pool.records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (failures[i].has_value()) {
            pool.failures.push_back(std::move(*failures[i]));
            continue;
        }
        pool.records.push_back(std::move(*records[i]));
        if (want_unfolded) pool.unfolded.push_back(std::move(*unfolded[i]));
    }
    return pool;
}

FractalSweep run_fractal_sweep(const ExperimentConfig& config) {
    if (config.fractal_sizes.size() < 3) {
        throw std::invalid_argument("fractal sweep: need at least 3 sizes");
    }
    if (config.fractal_q.empty()) {
        throw std::invalid_argument("fractal sweep: empty q grid");
    }
    const EnsembleKind kind = route_kind(config.ensemble);
    const std::size_t nq = config.fractal_q.size();

    FractalSweep sweep;
    sweep.moments_by_q.assign(nq, {});
    sweep.window_vectors_by_size.clear();

    struct Slot {
        std::vector<double> sums;  // per q
        std::size_t vectors = 0;
    };

    for (const int n_dim : config.fractal_sizes) {
        std::vector<std::optional<Slot>> slots(config.realizations);
        std::vector<std::optional<RealizationFailure>> failures(config.realizations);
        parallel_for_indices(config.realizations, resolve_workers(config.workers),
                             [&](std::size_t i) {
            const EnsembleSpec spec{kind, n_dim, config.master_seed, i};
            try {
                const CoefficientVector coeffs = sample_coefficients(spec);
                const DenseHermitianMatrix matrix = build_route_matrix(config.ensemble, coeffs);
                const SpectrumRecord record = eigendecompose(matrix, true, spec);
                const Eigen::MatrixXcd window = momentum_window_vectors(record, kind);
                Slot slot;
                slot.vectors = static_cast<std::size_t>(window.cols());
                slot.sums.assign(nq, 0.0);
                for (std::size_t qi = 0; qi < nq; ++qi) {
                    for (Eigen::Index c = 0; c < window.cols(); ++c) {
                        slot.sums[qi] += moment_sum(window.col(c), config.fractal_q[qi]);
                    }
                }
                slots[i] = std::move(slot);
            } catch (const std::exception& e) {
                failures[i] = RealizationFailure{i, e.what()};
            }
        });

        std::vector<double> totals(nq, 0.0);
        std::size_t vectors = 0;
        for (std::size_t i = 0; i < config.realizations; ++i) {
            if (failures[i].has_value()) {
                sweep.failures.push_back(std::move(*failures[i]));
                continue;
            }
            for (std::size_t qi = 0; qi < nq; ++qi) totals[qi] += slots[i]->sums[qi];
            vectors += slots[i]->vectors;
        }
        if (vectors == 0) {
            throw std::runtime_error("fractal sweep: empty energy window at N=" +
                                     std::to_string(n_dim));
        }
        sweep.window_vectors_by_size.push_back(vectors);
        for (std::size_t qi = 0; qi < nq; ++qi) {
            sweep.moments_by_q[qi].push_back(totals[qi] / static_cast<double>(vectors));
        }
    }

    for (std::size_t qi = 0; qi < nq; ++qi) {
        sweep.series.push_back(fractal_dimension(config.fractal_sizes, sweep.moments_by_q[qi],
                                                 config.fractal_q[qi]));
    }
    return sweep;
}

namespace {

Pool build_pool(const ExperimentConfig& config, MatrixRoute route, bool want_unfolded,
                std::vector<RealizationFailure>& failures) {
    Pool pool = run_pool(route, config, false, want_unfolded);
    enforce_failure_budget(pool.failures, config.realizations);
    failures.insert(failures.end(), pool.failures.begin(), pool.failures.end());
    return pool;
}

void emit_spacings(const Pool& pool, const ExperimentConfig& config, LawFamily family,
                   ArtifactWriter& writer, const std::string& suffix, bool with_fit) {
    for (int n = 0; n <= 2; ++n) {
        const HistogramEstimate hist = nn_spacing_distribution(
            pool.unfolded, n, config.spacing_bin_width, config.spacing_max);
        const ReferenceLaw law = spacing_law(family, n);
        writer.emit("p" + std::to_string(n) + suffix + ".csv", histogram_csv(hist, &law));
        if (with_fit && n == 0) {
            const FitResult fit = fit_spacing_mixture(hist);
            writer.emit("fit_mixture" + suffix + ".csv", fit_csv({"A", "a", "B", "b"}, fit));
        }
    }
}

void emit_ratio(const Pool& pool, const ExperimentConfig& config, LawFamily family,
                ArtifactWriter& writer, const std::string& suffix, bool with_fit) {
    const RatioDistribution ratio = ratio_distribution(
        pool.records, config.ratio_bin_width, config.ratio_max, config.retained_fraction);
    const ReferenceLaw ratio_law{family, Observable::Ratio, 0};
    writer.emit("ratio" + suffix + ".csv", histogram_csv(ratio.histogram, &ratio_law));
    if (with_fit) {
        const FitResult fit = fit_ratio_rational(ratio.histogram);
        writer.emit("fit_rational" + suffix + ".csv", fit_csv({"c", "alpha", "beta"}, fit));
    }
}

void emit_formfactor(const Pool& pool, const ExperimentConfig& config, LawFamily family,
                     ArtifactWriter& writer, const std::string& suffix) {
    const std::vector<double> tau = default_tau_grid(config.tau_step, config.tau_max);
    const FormFactorEstimate ff = form_factor(pool.unfolded, tau);
    const ReferenceLaw ff_law{family, Observable::FormFactor, 0};
    writer.emit("formfactor" + suffix + ".csv", formfactor_csv(ff, ff_law));

    const Compressibility chi = compressibility(ff);
    double ref_sum = 0.0;
    std::size_t ref_count = 0;
    for (const double t : tau) {
        if (t < 0.05 - 1e-9 || t > 0.25 + 1e-9) continue;
        ref_sum += evaluate_law(ff_law, t);
        ++ref_count;
    }
    std::string chi_csv = "chi,std_error,reference\n";
    chi_csv += csv_cell(chi.value);
    chi_csv += ',';
    chi_csv += csv_cell(chi.std_error);
    chi_csv += ',';
    chi_csv += csv_cell(ref_sum / static_cast<double>(ref_count));
    chi_csv += '\n';
    writer.emit("compressibility" + suffix + ".csv", chi_csv);
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.config = config;
    manifest.started_utc = utc_now_string();
    manifest.library_version = kLibraryVersion;

    ArtifactWriter writer(config.output_dir);

    switch (config.preset) {
        case Preset::Fig1Spacings: {
            const Pool pool = build_pool(config, config.ensemble, true, manifest.failures);
            emit_spacings(pool, config, LawFamily::SemiPoisson, writer, "", false);
            break;
        }
        case Preset::Fig2RatioFormfactor: {
            const Pool pool = build_pool(config, config.ensemble, true, manifest.failures);
            emit_ratio(pool, config, LawFamily::SemiPoisson, writer, "", false);
            emit_formfactor(pool, config, LawFamily::SemiPoisson, writer, "");
            break;
        }
        case Preset::Fig3RealSpacings: {
            const Pool pool = build_pool(config, config.ensemble, true, manifest.failures);
            emit_spacings(pool, config, LawFamily::Poisson, writer, "", true);
            break;
        }
        case Preset::Fig4RealRatio: {
            const Pool pool = build_pool(config, config.ensemble, true, manifest.failures);
            emit_ratio(pool, config, LawFamily::Poisson, writer, "", true);
            break;
        }
        case Preset::Subspectra: {
            const Pool plus = build_pool(config, MatrixRoute::SubPlus, true, manifest.failures);
            emit_spacings(plus, config, LawFamily::SemiPoisson, writer, "_plus", false);
            emit_ratio(plus, config, LawFamily::SemiPoisson, writer, "_plus", false);
            const Pool minus = build_pool(config, MatrixRoute::SubMinus, true, manifest.failures);
            emit_spacings(minus, config, LawFamily::SemiPoisson, writer, "_minus", false);
            emit_ratio(minus, config, LawFamily::SemiPoisson, writer, "_minus", false);
            break;
        }
        case Preset::FractalDimensions: {
            FractalSweep sweep = run_fractal_sweep(config);
            manifest.failures.insert(manifest.failures.end(), sweep.failures.begin(),
                                     sweep.failures.end());
            enforce_failure_budget(manifest.failures,
                                   config.realizations * config.fractal_sizes.size());
            std::string moments_csv = "q,n_dim,m_q,window_vectors\n";
            for (std::size_t qi = 0; qi < config.fractal_q.size(); ++qi) {
                for (std::size_t si = 0; si < config.fractal_sizes.size(); ++si) {
                    moments_csv += csv_cell(config.fractal_q[qi]);
                    moments_csv += ',';
                    moments_csv += std::to_string(config.fractal_sizes[si]);
                    moments_csv += ',';
                    moments_csv += csv_cell(sweep.moments_by_q[qi][si]);
                    moments_csv += ',';
                    moments_csv += std::to_string(sweep.window_vectors_by_size[si]);
                    moments_csv += '\n';
                }
            }
            writer.emit("moments.csv", moments_csv);
            std::string dims_csv = "q,tau_q,d_q,fit_stderr\n";
            for (const auto& series : sweep.series) {
                dims_csv += csv_cell(series.q);
                dims_csv += ',';
                dims_csv += csv_cell(series.tau_q);
                dims_csv += ',';
                dims_csv += csv_cell(series.d_q);
                dims_csv += ',';
                dims_csv += csv_cell(series.fit_stderr);
                dims_csv += '\n';
            }
            writer.emit("dimensions.csv", dims_csv);
            break;
        }
        case Preset::DensityRho: {
            Pool pool = run_pool(config.ensemble, config, false, false);
            manifest.failures = pool.failures;
            enforce_failure_budget(manifest.failures, config.realizations);
            const HistogramEstimate hist =
                density_estimate(pool.records, config.density_bin_width);
            writer.emit("density.csv", histogram_csv(hist, nullptr));
            break;
        }
        case Preset::VarianceCheck: {
            const auto table =
                validate_fourier_variances(config.n_dim, config.variance_samples,
                                           config.master_seed, resolve_workers(config.workers));
            std::string csv = "class,p,r,empirical,predicted,std_error,z\n";
            for (const auto& row : table) {
                switch (row.cls) {
                    case MomentClass::EtaEta: csv += "eta_eta"; break;
                    case MomentClass::XiEta: csv += "xi_eta"; break;
                    case MomentClass::XiXi: csv += "xi_xi"; break;
                }
                csv += ',';
                csv += std::to_string(row.p);
                csv += ',';
                csv += std::to_string(row.r);
                csv += ',';
                csv += csv_cell(row.empirical);
                csv += ',';
                csv += csv_cell(row.predicted);
                csv += ',';
                csv += csv_cell(row.std_error);
                csv += ',';
                const double z = row.std_error > 0.0
                                     ? (row.empirical - row.predicted) / row.std_error
                                     : 0.0;
                csv += csv_cell(z);
                csv += '\n';
            }
            writer.emit("variances.csv", csv);
            break;
        }
        case Preset::Custom:
            throw std::invalid_argument(
                "run_experiment: custom configs must name one of the presets");
    }

    manifest.artifacts = writer.digests();
    manifest.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text_file(writer.dir() / "manifest.json", serialize_manifest(manifest));
    return manifest;
}

DeviationReport compare_to_reference(const HistogramEstimate& hist, const ReferenceLaw& law) {
    if (law.observable == Observable::FormFactor) {
        throw std::invalid_argument(
            "compare_to_reference: form-factor law against a histogram estimate");
    }
    DeviationReport report;
    report.z_scores.assign(hist.bins(), 0.0);
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        const double c = hist.center(i);
        if (c < 0.0) continue;
        const double dev = hist.density[i] - evaluate_law(law, c);
        report.sup_norm = std::max(report.sup_norm, std::abs(dev));
        ++report.bins_compared;
        if (hist.std_error[i] > 0.0) {
            report.z_scores[i] = dev / hist.std_error[i];
            report.chi_square += report.z_scores[i] * report.z_scores[i];
        }
    }
    if (report.bins_compared == 0) {
        throw std::invalid_argument("compare_to_reference: no overlap with the law domain");
    }
    return report;
}

DeviationReport compare_to_reference(const FormFactorEstimate& ff, const ReferenceLaw& law) {
    if (law.observable != Observable::FormFactor) {
        throw std::invalid_argument(
            "compare_to_reference: form-factor estimate needs a form-factor law");
    }
    if (ff.tau_grid.empty()) {
        throw std::invalid_argument("compare_to_reference: empty tau grid");
    }
    DeviationReport report;
    for (std::size_t i = 0; i < ff.tau_grid.size(); ++i) {
        const double dev = ff.k_values[i] - evaluate_law(law, ff.tau_grid[i]);
        report.sup_norm = std::max(report.sup_norm, std::abs(dev));
        ++report.bins_compared;
    }
    return report;
}

}  // namespace toeplab
