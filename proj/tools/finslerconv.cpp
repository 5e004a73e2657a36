#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "finslerconv/experiments.hpp"
#include "finslerconv/image_io.hpp"
#include "finslerconv/phantom.hpp"
#include "finslerconv/selftest.hpp"

namespace fc = finslerconv;

namespace {

const std::map<std::string, fc::PaddingMode> kPadMap{
    {"periodic", fc::PaddingMode::Periodic},
    {"zero", fc::PaddingMode::Zero},
    {"replicate", fc::PaddingMode::Replicate}};
const std::map<std::string, fc::PolarVariant> kSchemeMap{
    {"grid", fc::PolarVariant::Grid}, {"onion", fc::PolarVariant::OnionPeel}};
const std::map<std::string, fc::RadiusConvention> kRadiusMap{
    {"sqrt", fc::RadiusConvention::Sqrt}, {"linear", fc::RadiusConvention::Linear}};
const std::map<std::string, fc::OmegaDir> kOmegaDirMap{{"grad", fc::OmegaDir::Grad},
                                                       {"grad-perp", fc::OmegaDir::GradPerp}};
const std::map<std::string, fc::ParamPath> kPathMap{{"chol5", fc::ParamPath::Cholesky5},
                                                    {"spec7", fc::ParamPath::Spectral7}};

template <typename T>
std::string map_key(const std::map<std::string, T>& m, T value) {
    for (const auto& [k, v] : m)
        if (v == value) return k;
    return "?";
}

struct CommonInput {
    std::string input_path;
    int phantom_size = 256;

    fc::GrayImage load() const {
        if (!input_path.empty()) return fc::read_image(input_path);
        return fc::make_phantom(phantom_size, phantom_size);
    }
};

void add_input_flags(CLI::App* cmd, CommonInput& in) {
    cmd->add_option("--input", in.input_path, "Grayscale PGM/PNG input (default: built-in phantom)");
    cmd->add_option("--phantom-size", in.phantom_size, "Phantom edge length when no input given");
}

void dump_kv(std::ostream& os, const std::string& key, const std::string& value) {
    os << key << "=" << value << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finslerconv: adaptive metric convolutions for grayscale images"};
    app.require_subcommand(1);

    // ------------------------------------------------------------------ denoise
    auto* denoise = app.add_subcommand("denoise", "Heuristic denoising with one k x k filter");
    CommonInput den_in;
    fc::DenoiseConfig den;
    std::string den_output, den_noisy_output;
    bool den_dump = false;
    add_input_flags(denoise, den_in);
    denoise->add_option("--output", den_output, "Denoised image path (.png/.pgm)");
    denoise->add_option("--noisy-output", den_noisy_output, "Optional path for the noisy input");
    denoise->add_option("--method", den.method,
                        "standard|dilated|interp-standard|deformable-random|utb-heuristic|ugb-heuristic");
    denoise->add_option("--k", den.k);
    denoise->add_option("--sigma-n", den.sigma_n, "Gaussian noise level added to the input");
    denoise->add_option("--seed", den.seed);
    denoise->add_option("--eps-omega", den.eps_omega);
    denoise->add_option("--iota", den.iota);
    denoise->add_option("--alpha", den.alpha);
    denoise->add_option("--dilation", den.dilation);
    denoise->add_option("--scheme", den.scheme)->transform(CLI::CheckedTransformer(kSchemeMap));
    denoise->add_option("--padding", den.pad)->transform(CLI::CheckedTransformer(kPadMap));
    denoise->add_option("--radius-convention", den.radius_convention)
        ->transform(CLI::CheckedTransformer(kRadiusMap));
    denoise->add_option("--omega-dir", den.omega_dir)
        ->transform(CLI::CheckedTransformer(kOmegaDirMap));
    denoise->add_option("--ugb-dt", den.ugb_dt);
    denoise->add_option("--ugb-t-end", den.ugb_t_end);
    denoise->add_option("--ugb-s0", den.ugb_s0);
    denoise->add_option("--ugb-kernel-radius", den.ugb_kernel_radius);
    denoise->add_flag("--ugb-allow-large", den.ugb_allow_large);
    denoise->add_flag("--dump-config", den_dump);

    // ------------------------------------------------------------- train-single
    auto* train = app.add_subcommand("train-single", "Learn kernel shapes on one noisy image");
    CommonInput tr_in;
    fc::TrainSingleConfig tsc;
    std::string tr_outdir;
    std::string tr_lr_grid;
    bool tr_no_detach = false;
    bool tr_dump = false;
    add_input_flags(train, tr_in);
    train->add_option("--out-dir", tr_outdir, "Directory for images and CSV curves");
    train->add_option("--method", tsc.method, "utb|deformable");
    train->add_option("--k", tsc.train.k);
    train->add_option("--sigma-n", tsc.sigma_n);
    train->add_option("--seed-train", tsc.seed_train);
    train->add_option("--seed-test", tsc.seed_test);
    train->add_option("--eps-omega", tsc.train.eps_omega);
    train->add_option("--iterations", tsc.train.iterations);
    train->add_option("--lr", tsc.train.lr, "Fixed learning rate (negative/omitted: use the finder)");
    train->add_option("--lr-grid", tr_lr_grid, "Comma-separated finder candidates");
    train->add_option("--scheme", tsc.train.scheme)
        ->transform(CLI::CheckedTransformer(kSchemeMap));
    train->add_option("--padding", tsc.train.pad)->transform(CLI::CheckedTransformer(kPadMap));
    train->add_option("--param-path", tsc.train.path)
        ->transform(CLI::CheckedTransformer(kPathMap));
    train->add_flag("--learn-weights", tsc.train.learn_weights, "LKW instead of FKW");
    train->add_flag("--no-detach", tr_no_detach, "Backpropagate through the drift scale factor");
    train->add_flag("--dump-config", tr_dump);

    // ------------------------------------------------------------------ compare
    auto* compare = app.add_subcommand("compare", "Method/k/sigma grid; one CSV row per cell");
    CommonInput cmp_in;
    fc::CompareConfig cmp;
    std::string cmp_methods = "deformable,utb";
    std::string cmp_ks = "5,11";
    std::string cmp_sigmas = "0.3";
    std::string cmp_output;
    bool cmp_dump = false;
    add_input_flags(compare, cmp_in);
    compare->add_option("--methods", cmp_methods, "Comma-separated: utb,deformable");
    compare->add_option("--ks", cmp_ks, "Comma-separated kernel sizes");
    compare->add_option("--sigmas", cmp_sigmas, "Comma-separated noise levels");
    compare->add_option("--output", cmp_output, "CSV output path (stdout when omitted)");
    compare->add_option("--seed-train", cmp.base.seed_train);
    compare->add_option("--seed-test", cmp.base.seed_test);
    compare->add_option("--eps-omega", cmp.base.train.eps_omega);
    compare->add_option("--iterations", cmp.base.train.iterations);
    compare->add_option("--scheme", cmp.base.train.scheme)
        ->transform(CLI::CheckedTransformer(kSchemeMap));
    compare->add_option("--padding", cmp.base.train.pad)
        ->transform(CLI::CheckedTransformer(kPadMap));
    compare->add_flag("--dump-config", cmp_dump);

    // ----------------------------------------------------------------- selftest
    auto* selftest = app.add_subcommand("selftest", "Run the full property suite");
    bool st_quick = false;
    selftest->add_flag("--quick", st_quick, "Smaller training-based checks");

    // ------------------------------------------------------------ train-dataset
    auto* dataset = app.add_subcommand(
        "train-dataset", "Train an intermediate parameter head on a directory (experimental)");
    fc::TrainDatasetConfig tdc;
    std::string ds_dir;
    int ds_phantoms = 4;
    dataset->add_option("--input-dir", ds_dir, "Directory of PGM/PNG images");
    dataset->add_option("--phantom-count", ds_phantoms, "Phantom variants when no directory");
    dataset->add_option("--k", tdc.k);
    dataset->add_option("--epochs", tdc.epochs);
    dataset->add_option("--lr", tdc.lr);
    dataset->add_option("--sigma-n", tdc.sigma_n);
    dataset->add_option("--eps-omega", tdc.eps_omega);
    dataset->add_option("--seed", tdc.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (denoise->parsed()) {
            if (den_dump) {
                dump_kv(std::cout, "command", "denoise");
                dump_kv(std::cout, "input", den_in.input_path);
                dump_kv(std::cout, "phantom-size", std::to_string(den_in.phantom_size));
                dump_kv(std::cout, "output", den_output);
                dump_kv(std::cout, "noisy-output", den_noisy_output);
                dump_kv(std::cout, "method", den.method);
                dump_kv(std::cout, "k", std::to_string(den.k));
                dump_kv(std::cout, "sigma-n", fc::format_double(den.sigma_n));
                dump_kv(std::cout, "seed", std::to_string(den.seed));
                dump_kv(std::cout, "eps-omega", fc::format_double(den.eps_omega));
                dump_kv(std::cout, "iota", fc::format_double(den.iota));
                dump_kv(std::cout, "alpha", fc::format_double(den.alpha));
                dump_kv(std::cout, "dilation", fc::format_double(den.dilation));
                dump_kv(std::cout, "scheme", map_key(kSchemeMap, den.scheme));
                dump_kv(std::cout, "padding", map_key(kPadMap, den.pad));
                dump_kv(std::cout, "radius-convention", map_key(kRadiusMap, den.radius_convention));
                dump_kv(std::cout, "omega-dir", map_key(kOmegaDirMap, den.omega_dir));
                dump_kv(std::cout, "ugb-dt", fc::format_double(den.ugb_dt));
                dump_kv(std::cout, "ugb-t-end", fc::format_double(den.ugb_t_end));
                dump_kv(std::cout, "ugb-s0", fc::format_double(den.ugb_s0));
                dump_kv(std::cout, "ugb-kernel-radius", std::to_string(den.ugb_kernel_radius));
                dump_kv(std::cout, "ugb-allow-large", den.ugb_allow_large ? "1" : "0");
                return 0;
            }
            const fc::GrayImage clean = den_in.load();
            const fc::DenoiseResult res = fc::run_denoise(clean, den);
            if (!den_output.empty()) fc::write_image(res.output, den_output);
            if (!den_noisy_output.empty()) fc::write_image(res.noisy, den_noisy_output);
            std::cout << "method=" << den.method << " input-psnr=" << res.psnr_noisy
                      << " output-psnr=" << res.psnr_output << "\n";
            return 0;
        }

        if (train->parsed()) {
            tsc.train.detach_omega_scale = !tr_no_detach;
            if (!tr_lr_grid.empty()) {
                std::stringstream ss(tr_lr_grid);
                std::string tok;
                while (std::getline(ss, tok, ',')) tsc.train.lr_grid.push_back(std::stod(tok));
            }
            if (tr_dump) {
                dump_kv(std::cout, "command", "train-single");
                dump_kv(std::cout, "input", tr_in.input_path);
                dump_kv(std::cout, "phantom-size", std::to_string(tr_in.phantom_size));
                dump_kv(std::cout, "out-dir", tr_outdir);
                dump_kv(std::cout, "method", tsc.method);
                dump_kv(std::cout, "k", std::to_string(tsc.train.k));
                dump_kv(std::cout, "sigma-n", fc::format_double(tsc.sigma_n));
                dump_kv(std::cout, "seed-train", std::to_string(tsc.seed_train));
                dump_kv(std::cout, "seed-test", std::to_string(tsc.seed_test));
                dump_kv(std::cout, "eps-omega", fc::format_double(tsc.train.eps_omega));
                dump_kv(std::cout, "iterations", std::to_string(tsc.train.iterations));
                dump_kv(std::cout, "lr", fc::format_double(tsc.train.lr));
                dump_kv(std::cout, "lr-grid", tr_lr_grid);
                dump_kv(std::cout, "scheme", map_key(kSchemeMap, tsc.train.scheme));
                dump_kv(std::cout, "padding", map_key(kPadMap, tsc.train.pad));
                dump_kv(std::cout, "param-path", map_key(kPathMap, tsc.train.path));
                dump_kv(std::cout, "learn-weights", tsc.train.learn_weights ? "1" : "0");
                dump_kv(std::cout, "no-detach", tr_no_detach ? "1" : "0");
                return 0;
            }
            const fc::GrayImage clean = tr_in.load();
            const fc::TrainSingleOutcome outcome = fc::run_train_single(clean, tsc);
            std::cout << fc::compare_csv_header() << "\n"
                      << fc::summary_row(tsc, outcome.result) << "\n";
            if (!tr_outdir.empty()) {
                namespace fs = std::filesystem;
                fs::create_directories(tr_outdir);
                const fs::path dir(tr_outdir);
                fc::write_image(outcome.noisy_train, (dir / "noisy_train.png").string());
                fc::write_image(outcome.noisy_test, (dir / "noisy_test.png").string());
                fc::write_image(outcome.denoised_train, (dir / "denoised_train.png").string());
                fc::write_image(outcome.denoised_test, (dir / "denoised_test.png").string());
                std::ofstream curves(dir / "curves.csv");
                curves << fc::curves_csv(outcome.result);
                std::ofstream summary(dir / "summary.csv");
                summary << fc::compare_csv_header() << "\n"
                        << fc::summary_row(tsc, outcome.result) << "\n";
            }
            return 0;
        }

        if (compare->parsed()) {
            auto split = [](const std::string& s) {
                std::vector<std::string> parts;
                std::stringstream ss(s);
                std::string tok;
                while (std::getline(ss, tok, ',')) parts.push_back(tok);
                return parts;
            };
            cmp.methods = split(cmp_methods);
            cmp.ks.clear();
            for (const auto& t : split(cmp_ks)) cmp.ks.push_back(std::stoi(t));
            cmp.sigmas.clear();
            for (const auto& t : split(cmp_sigmas)) cmp.sigmas.push_back(std::stod(t));
            if (cmp_dump) {
                dump_kv(std::cout, "command", "compare");
                dump_kv(std::cout, "input", cmp_in.input_path);
                dump_kv(std::cout, "phantom-size", std::to_string(cmp_in.phantom_size));
                dump_kv(std::cout, "methods", cmp_methods);
                dump_kv(std::cout, "ks", cmp_ks);
                dump_kv(std::cout, "sigmas", cmp_sigmas);
                dump_kv(std::cout, "output", cmp_output);
                dump_kv(std::cout, "seed-train", std::to_string(cmp.base.seed_train));
                dump_kv(std::cout, "seed-test", std::to_string(cmp.base.seed_test));
                dump_kv(std::cout, "eps-omega", fc::format_double(cmp.base.train.eps_omega));
                dump_kv(std::cout, "iterations", std::to_string(cmp.base.train.iterations));
                dump_kv(std::cout, "scheme", map_key(kSchemeMap, cmp.base.train.scheme));
                dump_kv(std::cout, "padding", map_key(kPadMap, cmp.base.train.pad));
                return 0;
            }
            const fc::GrayImage clean = cmp_in.load();
            const std::string csv = fc::run_compare(clean, cmp);
            if (cmp_output.empty()) {
                std::cout << csv;
            } else {
                std::ofstream out(cmp_output, std::ios::binary);
                out << csv;
            }
            return 0;
        }

        if (selftest->parsed()) {
            const auto results = fc::run_selftest(st_quick);
            bool all_ok = true;
            for (const auto& r : results) {
                std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
                if (!r.passed) std::cout << " -- " << r.detail;
                std::cout << "\n";
                all_ok = all_ok && r.passed;
            }
            std::cout << (all_ok ? "selftest: all suites passed\n" : "selftest: FAILURES\n");
            return all_ok ? 0 : 2;
        }

        if (dataset->parsed()) {
            std::vector<fc::GrayImage> images;
            if (!ds_dir.empty()) {
                namespace fs = std::filesystem;
                std::vector<fs::path> paths;
                for (const auto& entry : fs::directory_iterator(ds_dir)) {
                    const auto ext = entry.path().extension().string();
                    if (ext == ".png" || ext == ".pgm") paths.push_back(entry.path());
                }
                std::sort(paths.begin(), paths.end());
                for (const auto& p : paths) images.push_back(fc::read_image(p.string()));
            } else {
                for (int i = 0; i < ds_phantoms; ++i)
                    images.push_back(fc::make_phantom(96 + 16 * i, 96 + 16 * i));
            }
            const fc::TrainDatasetResult res = fc::run_train_dataset(images, tdc);
            for (std::size_t e = 0; e < res.epoch_mse.size(); ++e)
                std::cout << "epoch=" << e << " mse=" << fc::format_double(res.epoch_mse[e])
                          << "\n";
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 1;
}
