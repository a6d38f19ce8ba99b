#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "toeplab/experiments.hpp"
#include "toeplab/version.hpp"

namespace {

toeplab::ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return toeplab::parse_config(buf.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toeplab - spectral statistics of random Toeplitz matrices"};
    app.set_version_flag("--version", std::string(toeplab::kLibraryVersion));
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute an experiment preset and write CSV tables");
    std::string preset_name;
    std::string config_path;
    std::string ensemble_name;
    std::string out_dir;
    int n_dim = 0;
    long long realizations = -1;
    std::uint64_t seed = 0;
    bool have_seed = false;
    int workers = -1;
    bool paper_scale = false;

    auto* preset_opt =
        run->add_option("--preset", preset_name,
                        "one of: fig1-spacings, fig2-ratio-formfactor, fig3-real-spacings, "
                        "fig4-real-ratio, subspectra, fractal-dimensions, density-rho, "
                        "variance-check");
    auto* config_opt = run->add_option("--config", config_path, "JSON config file");
    preset_opt->excludes(config_opt);
    run->add_option("--n", n_dim, "matrix dimension N");
    run->add_option("--realizations", realizations, "number of realizations");
    run->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
        have_seed = true;
    });
    run->add_option("--ensemble", ensemble_name,
                    "complex | real | sub-plus | sub-minus | fourier");
    run->add_option("--workers", workers, "worker thread count (0 = hardware)");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--paper-scale", paper_scale, "use the published realization counts");

    CLI11_PARSE(app, argc, argv);

    try {
        toeplab::ExperimentConfig config;
        if (!config_path.empty()) {
            config = load_config_file(config_path);
        } else if (!preset_name.empty()) {
            config = toeplab::preset_config(toeplab::preset_from_string(preset_name));
        } else {
            std::cerr << "run: either --preset or --config is required\n";
            return 2;
        }
        if (paper_scale) toeplab::apply_paper_scale(config);
        if (n_dim > 0) config.n_dim = n_dim;
        if (realizations >= 0) config.realizations = static_cast<std::size_t>(realizations);
        if (have_seed) config.master_seed = seed;
        if (!ensemble_name.empty()) config.ensemble = toeplab::route_from_string(ensemble_name);
        if (workers >= 0) config.workers = workers;
        if (!out_dir.empty()) config.output_dir = out_dir;

        const toeplab::RunManifest manifest = toeplab::run_experiment(config);
        std::cout << "preset " << toeplab::to_string(config.preset) << ": wrote "
                  << manifest.artifacts.size() << " artifact(s) to " << config.output_dir
                  << " in " << manifest.elapsed_seconds << " s";
        if (!manifest.failures.empty()) {
            std::cout << " (" << manifest.failures.size() << " realization failure(s), see manifest)";
        }
        std::cout << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
