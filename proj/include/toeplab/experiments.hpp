#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toeplab/multifractal.hpp"
#include "toeplab/reference_laws.hpp"
#include "toeplab/spectral_stats.hpp"

namespace toeplab {

enum class Preset {
    Fig1Spacings,
    Fig2RatioFormfactor,
    Fig3RealSpacings,
    Fig4RealRatio,
    Subspectra,
    FractalDimensions,
    DensityRho,
    VarianceCheck,
    Custom,
};

/// Which matrix gets diagonalized per realization.
enum class MatrixRoute { Complex, Real, SubPlus, SubMinus, Fourier };

struct ExperimentConfig {
    Preset preset = Preset::Custom;
    MatrixRoute ensemble = MatrixRoute::Complex;
    int n_dim = 200;
    std::size_t realizations = 2000;
    std::uint64_t master_seed = 20250811;
    double retained_fraction = 0.6;
    int poly_degree = 3;
    double spacing_bin_width = 0.1;
    double spacing_max = 4.0;
    double ratio_bin_width = 0.1;
    double ratio_max = 5.0;
    double tau_step = 0.02;
    double tau_max = 3.0;
    double density_bin_width = 0.1;
    std::vector<int> fractal_sizes = {128, 256, 512, 1024};
    std::vector<double> fractal_q = {0.5, 1.5, 2.0};
    std::size_t variance_samples = 100000;
    int workers = 0;  // 0 = hardware concurrency
    std::string output_dir = "out";
    bool paper_scale = false;
};

/// Desk-scale defaults for a preset (paper-scale counts behind apply_paper_scale).
ExperimentConfig preset_config(Preset preset);

/// Switch realization counts to the published sweep sizes.
void apply_paper_scale(ExperimentConfig& config);

std::string to_string(Preset preset);
std::string to_string(MatrixRoute route);
Preset preset_from_string(const std::string& name);
MatrixRoute route_from_string(const std::string& name);

/// JSON round trip; parse(serialize(config)) == config.
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& json_text);

struct ArtifactDigest {
    std::string file;    // relative to output_dir
    std::string sha256;  // lowercase hex
};

struct RealizationFailure {
    std::uint64_t realization_index = 0;
    std::string message;
};

struct RunManifest {
    ExperimentConfig config;
    std::vector<ArtifactDigest> artifacts;
    std::vector<RealizationFailure> failures;
    std::string started_utc;
    double elapsed_seconds = 0.0;
    std::string library_version;
};

std::string serialize_manifest(const RunManifest& manifest);

/// A diagonalized ensemble sweep: one record (and optionally one unfolded
/// spectrum) per surviving realization, failures listed separately.
struct Pool {
    std::vector<SpectrumRecord> records;
    std::vector<UnfoldedSpectrum> unfolded;
    std::vector<RealizationFailure> failures;
};

/// Run `config.realizations` seeded realizations of the given route across
/// the configured workers. Results are identical for any worker count.
Pool run_pool(MatrixRoute route, const ExperimentConfig& config, bool want_vectors = false,
              bool want_unfolded = true);

struct FractalSweep {
    std::vector<ScalingSeries> series;  // one per q
    // per (q, size): pooled moment and the number of window vectors
    std::vector<std::vector<double>> moments_by_q;
    std::vector<std::size_t> window_vectors_by_size;
    std::vector<RealizationFailure> failures;
};

/// Moment scaling sweep over config.fractal_sizes for each q.
FractalSweep run_fractal_sweep(const ExperimentConfig& config);

/// Execute a preset end to end, write the plot-ready CSV tables and the
/// manifest into config.output_dir, and return the manifest. Deterministic
/// for a fixed (config, master_seed) regardless of worker count. Aborts
/// (throws) when more than 1% of realizations fail.
RunManifest run_experiment(const ExperimentConfig& config);

struct DeviationReport {
    double sup_norm = 0.0;
    std::vector<double> z_scores;  // per bin; 0 where the bin error vanishes
    double chi_square = 0.0;
    std::size_t bins_compared = 0;
};

/// Deviation of an estimate from a closed-form law on the estimate's own grid.
DeviationReport compare_to_reference(const HistogramEstimate& hist, const ReferenceLaw& law);
DeviationReport compare_to_reference(const FormFactorEstimate& ff, const ReferenceLaw& law);

/// Lowercase-hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal formatting used in every CSV cell.
std::string format_double(double value);

}  // namespace toeplab
