// Command-line front end. All file IO of the toolkit happens here.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "facegen/appearance/hdr.hpp"
#include "facegen/appearance/pca.hpp"
#include "facegen/appearance/pore_map.hpp"
#include "facegen/error.hpp"
#include "facegen/hair/hair_code.hpp"
#include "facegen/io/matrix_container.hpp"
#include "facegen/learning/fit.hpp"
#include "facegen/mesh/obj_io.hpp"
#include "facegen/mesh/subdivision.hpp"
#include "facegen/model/model_io.hpp"
#include "facegen/pipeline/scene.hpp"
#include "facegen/sampling/gmm.hpp"
#include "facegen/util/log.hpp"
#include "facegen/util/parallel.hpp"

#include <unistd.h>

namespace fs = std::filesystem;
using namespace facegen;
using nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string config;
    std::string out;
    int threads = 1;
    std::string sigma_mode;
    bool json_logs = false;
    bool quiet = false;
};

json read_json(const fs::path& path) {
    try {
        return json::parse(io::read_text_file(path));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, "'" + path.string() + "': " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { io::write_text_file(path, j.dump(2) + "\n"); }

fs::path require_out(const Globals& g, const char* what) {
    require(!g.out.empty(), ErrorCode::InvalidParam, std::string("--out is required for ") + what);
    return g.out;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

// Rows of comma-separated numbers, or a named tensor from a matrix container.
Eigen::MatrixXd load_matrix(const fs::path& path, const std::string& tensor) {
    if (path.extension() == ".csv") {
        std::istringstream in(io::read_text_file(path));
        std::vector<std::vector<double>> rows;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
            std::vector<double> row;
            std::stringstream cells(line);
            std::string cell;
            while (std::getline(cells, cell, ',')) {
                try {
                    std::size_t used = 0;
                    row.push_back(std::stod(cell, &used));
                    require(cell.find_first_not_of(" \t\r", used) == std::string::npos, ErrorCode::ParseError, "");
                } catch (const std::exception&) {
                    fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
                }
            }
            require(rows.empty() || row.size() == rows.front().size(), ErrorCode::ParseError,
                    path.string() + ":" + std::to_string(line_no) + ": inconsistent column count");
            rows.push_back(std::move(row));
        }
        require(!rows.empty(), ErrorCode::ParseError, "'" + path.string() + "' holds no rows");
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
        return m;
    }
    const auto c = io::MatrixContainer::load(path);
    const auto& t = c.get(tensor);
    require(t.shape.size() == 2, ErrorCode::DimensionMismatch, "tensor '" + tensor + "' must be 2-D");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        t.data.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
}

std::vector<fs::path> expand_obj_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& s : inputs) {
        const fs::path p(s);
        require(fs::exists(p), ErrorCode::IoError, "scan not found: '" + p.string() + "'");
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".obj") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

// Without --library, scenes come from the demo library (fixed demo seed), built in a scratch
// directory that is removed once everything is loaded.
pipeline::AssetLibrary open_library(const std::string& path) {
    if (!path.empty()) return pipeline::load_asset_library(path);
    const fs::path scratch = fs::temp_directory_path() / ("facegen-demo-" + std::to_string(::getpid()));
    fs::remove_all(scratch);
    try {
        auto library = pipeline::load_asset_library(pipeline::write_demo_assets(scratch, 0));
        fs::remove_all(scratch);
        return library;
    } catch (...) {
        fs::remove_all(scratch);
        throw;
    }
}

// ---- subcommands ----

int run_fit(const Globals& g, const std::vector<std::string>& scan_inputs, const std::string& base, int m) {
    const fs::path out = require_out(g, "fit");
    learning::FitConfig config;
    if (!g.config.empty()) config = learning::fit_config_from_json(read_json(g.config));
    if (g.seed_given) config.seed = g.seed;
    config.threads = g.threads;

    learning::ScanSet scans;
    for (const auto& p : expand_obj_inputs(scan_inputs)) scans.push_back({p.stem().string(), load_obj(p)});
    require(!scans.empty(), ErrorCode::IoError, "no .obj scans found");
    const auto base_model = model::load_model(base);
    log::info("fitting " + std::to_string(m) + " identity shapes to " + std::to_string(scans.size()) + " scans");

    const auto result = learning::fit(scans, base_model, m, config);
    fs::create_directories(out);
    model::save_model(out / "model.json", result.model);
    write_json(out / "fit_report.json", learning::to_json(result.report));
    io::write_text_file(out / "loss.csv", learning::trajectory_csv(result.report));
    log::info("fit finished after " + std::to_string(result.report.iterations) + " iterations, loss " +
              fmt("%.6g", result.report.final_total));
    return 0;
}

pipeline::SampleOptions sample_options(const Globals& g) {
    pipeline::SampleOptions opts;
    if (!g.config.empty()) opts = pipeline::sample_options_from_json(read_json(g.config));
    if (!g.sigma_mode.empty()) {
        opts.sigma_mode = g.sigma_mode == "var" ? sampling::SigmaMode::Var : sampling::SigmaMode::Std;
    }
    return opts;
}

int run_sample(const Globals& g, const std::string& library_path, int count, int levels) {
    const fs::path out = require_out(g, "sample");
    const auto library = open_library(library_path);
    const auto opts = sample_options(g);
    fs::create_directories(out);
    std::vector<std::string> names(static_cast<std::size_t>(count));
    parallel_for(count, g.threads, [&](int i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03d", i);
        names[i] = name;
        auto scene = pipeline::sample_scene(library, pipeline::scene_seed(g.seed, i), opts);
        scene.scene_id = name;
        const auto geometry = pipeline::realize_scene(library, scene, {levels, 1});
        pipeline::export_scene(scene, geometry, out / name);
    });
    write_json(out / "scenes.json", {{"seed", g.seed}, {"count", count}, {"scenes", names}});
    log::info("wrote " + std::to_string(count) + " scenes to " + out.string());
    return 0;
}

int run_export(const Globals& g, const std::string& library_path, const std::string& scene_path, int levels) {
    const fs::path out = require_out(g, "export");
    const auto library = open_library(library_path);
    const auto scene = pipeline::scene_from_json(read_json(scene_path));
    const auto geometry = pipeline::realize_scene(library, scene, {levels, g.threads});
    const auto files = pipeline::export_scene(scene, geometry, out);
    log::info("exported " + std::to_string(files.size()) + " files to " + out.string());
    return 0;
}

int run_subdivide(const Globals& g, const std::string& input, int levels) {
    const fs::path out = require_out(g, "subdivide");
    const auto mesh = subdivide_catmull_clark(load_obj(input), levels);
    ensure_parent(out);
    save_obj(out, mesh);
    log::info(std::to_string(mesh.vertex_count()) + " vertices, " + std::to_string(mesh.face_count()) + " quads");
    return 0;
}

int run_encode_hair(const Globals& g, const std::string& groom_path, int uv_res, int volume_res, double margin,
                    const std::string& report_path, int report_strands) {
    const fs::path out = require_out(g, "encode-hair");
    const auto groom = hair::load_groom(groom_path);
    const auto box = hair::bounding_box(groom, margin, true);
    const auto code = hair::encode_groom(groom, uv_res, volume_res, box, g.threads);
    ensure_parent(out);
    hair::to_container(code).save(out);
    if (!report_path.empty()) {
        const int n = report_strands > 0 ? report_strands : static_cast<int>(groom.strands.size());
        const auto decoded = hair::decode_groom(code, n, hair::default_step(code), g.seed, g.threads);
        const auto again = hair::encode_groom(decoded.groom, uv_res, volume_res, box, g.threads);
        const auto deltas = hair::map_deltas(code, again);
        const auto errors = hair::endpoint_errors(groom, decoded.groom);
        double mean = 0.0;
        for (double e : errors) mean += e;
        mean /= static_cast<double>(errors.size());
        int early = 0;
        for (bool b : decoded.terminated_early) early += b ? 1 : 0;
        const json report = {{"density_rms_delta", deltas.density},
                             {"length_rms_delta", deltas.length},
                             {"mean_endpoint_error_m", mean},
                             {"mean_endpoint_error_cell_diagonals", mean / code.cell_size().norm()},
                             {"early_terminations", early},
                             {"endpoint_error_m", errors}};
        ensure_parent(report_path);
        write_json(report_path, report);
    }
    log::info("encoded " + std::to_string(groom.strands.size()) + " strands into a " +
              std::to_string(hair::code_dimension(uv_res, volume_res)) + "-dimensional code");
    return 0;
}

int run_decode_hair(const Globals& g, const std::string& code_path, int strands, double step) {
    const fs::path out = require_out(g, "decode-hair");
    const auto code = hair::hair_code_from_container(io::MatrixContainer::load(code_path));
    const auto decoded =
        hair::decode_groom(code, strands, step > 0.0 ? step : hair::default_step(code), g.seed, g.threads);
    ensure_parent(out);
    hair::save_groom(out, decoded.groom);
    int early = 0;
    for (bool b : decoded.terminated_early) early += b ? 1 : 0;
    log::info("decoded " + std::to_string(strands) + " strands, " + std::to_string(early) + " stopped early");
    return 0;
}

int run_fit_pca(const Globals& g, const std::string& kind, const std::vector<std::string>& inputs, int k,
                int rotations, const std::string& tensor) {
    const fs::path out = require_out(g, "fit-pca");
    require(!inputs.empty(), ErrorCode::InvalidParam, "fit-pca needs at least one input");
    std::vector<Eigen::VectorXd> rows;
    std::string tag;
    if (kind == "hdr") {
        tag = "log1p+area64x128";
        sampling::Rng rng(g.seed);
        for (const auto& p : inputs) {
            const auto img = appearance::load_rgbe(p);
            for (const auto& r : appearance::augment_rotations(img, rotations, rng).images) {
                rows.push_back(appearance::preprocess_hdr(r));
            }
        }
    } else if (kind == "hair") {
        tag = "hair_code";
        for (const auto& p : inputs) {
            rows.push_back(hair::code_to_vector(hair::hair_code_from_container(io::MatrixContainer::load(p))));
        }
    } else {
        for (const auto& p : inputs) {
            const auto m = load_matrix(p, tensor);
            for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(m.row(i).transpose());
        }
    }
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == samples.cols(), ErrorCode::DimensionMismatch, "inputs have different dimensions");
        samples.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    const auto pca = appearance::fit_pca(samples, k, tag);
    ensure_parent(out);
    appearance::to_container(pca).save(out);
    log::info(std::to_string(pca.components.cols()) + " components explain " +
              fmt("%.4f", pca.explained_ratio.sum()) + " of the variance of " + std::to_string(samples.rows()) +
              " samples");
    return 0;
}

int run_fit_gmm(const Globals& g, const std::string& data_path, const std::string& tensor, int k, double ridge) {
    const fs::path out = require_out(g, "fit-gmm");
    sampling::GmmOptions opts;
    opts.ridge = ridge;
    const auto fit = sampling::fit_gmm(load_matrix(data_path, tensor), k, g.seed, opts);
    ensure_parent(out);
    sampling::to_container(fit.mixture).save(out);
    log::info("EM ran " + std::to_string(fit.objective.size()) + " iterations, objective " +
              fmt("%.8g", fit.objective.empty() ? 0.0 : fit.objective.back()));
    return 0;
}

int run_pore_map(const Globals& g, const std::string& input, double sigma, const std::string& extrema_path,
                 double threshold) {
    const fs::path out = require_out(g, "pore-map");
    const auto response = appearance::pore_map(appearance::load_pgm(input), sigma);
    ensure_parent(out);
    appearance::save_pgm16(out, response);
    if (!extrema_path.empty()) {
        double peak = 0.0;
        for (double v : response.data) peak = std::max(peak, std::abs(v));
        json list = json::array();
        if (peak > 0.0) {
            for (const auto& e : appearance::local_extrema(response, threshold * peak)) {
                list.push_back({{"x", e.x}, {"y", e.y}, {"value", e.value}});
            }
        }
        ensure_parent(extrema_path);
        write_json(extrema_path, list);
    }
    return 0;
}

int run_demo_assets(const Globals& g) {
    const fs::path out = require_out(g, "demo-assets");
    const auto library = pipeline::write_demo_assets(out, g.seed);
    log::info("demo asset library written to " + library.string());
    return 0;
}

int exit_code(const Error& e) { return category(e.code()) == ErrorCategory::Numeric ? 3 : 2; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic face toolkit: model fitting, sampling, hair and appearance representations, export"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Root random seed")->each([&](const std::string&) { g.seed_given = true; });
    app.add_option("--config", g.config, "JSON configuration for the subcommand");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
        ->envname("FACEGEN_THREADS")
        ->check(CLI::PositiveNumber);
    app.add_option("--sigma-mode", g.sigma_mode, "Identity sampling sigma scales the std or the variance")
        ->check(CLI::IsMember({"std", "var"}));
    app.add_flag("--json-logs", g.json_logs, "Write diagnostics as JSON lines");
    app.add_flag("--quiet", g.quiet, "Only warnings and errors");

    auto* fit = app.add_subcommand("fit", "Learn an identity basis from registered scans");
    std::vector<std::string> scans;
    std::string base;
    int identity_dim = 0;
    fit->add_option("--scans", scans, "Scan .obj files or directories of them")->required();
    fit->add_option("--base", base, "Model providing template, expressions, skeleton and skinning")->required();
    fit->add_option("-m,--identity-dim", identity_dim, "Number of identity shapes")->required();

    auto* sample = app.add_subcommand("sample", "Sample scenes from an asset library and export them");
    std::string library;
    int count = 1, levels = 3;
    sample->add_option("--library", library, "Asset library JSON (default: built-in demo library)");
    sample->add_option("--count", count, "Number of scenes")->check(CLI::PositiveNumber);
    sample->add_option("--levels", levels, "Subdivision levels")->check(CLI::NonNegativeNumber);

    auto* exp = app.add_subcommand("export", "Realize a scene description and export it");
    std::string scene_path;
    exp->add_option("--library", library, "Asset library JSON (default: built-in demo library)");
    exp->add_option("--scene", scene_path, "scene.json to realize")->required();
    exp->add_option("--levels", levels, "Subdivision levels")->check(CLI::NonNegativeNumber);

    auto* subdivide = app.add_subcommand("subdivide", "Catmull-Clark subdivision of an OBJ quad mesh");
    std::string input;
    int subdiv_levels = 1;
    subdivide->add_option("--in", input, "Input OBJ")->required();
    subdivide->add_option("--levels", subdiv_levels, "Subdivision levels")->check(CLI::NonNegativeNumber);

    auto* encode = app.add_subcommand("encode-hair", "Encode a groom into density, length and flow maps");
    std::string groom_path, report_path;
    int uv_res = hair::kDefaultUvResolution, volume_res = hair::kDefaultVolumeResolution, report_strands = 0;
    double margin = 0.02;
    encode->add_option("--groom", groom_path, "Groom file")->required();
    encode->add_option("--uv-res", uv_res, "UV map resolution")->check(CLI::Range(4, 4096));
    encode->add_option("--volume-res", volume_res, "Flow volume resolution")->check(CLI::Range(4, 512));
    encode->add_option("--margin", margin, "Volume margin around the groom (m)")->check(CLI::NonNegativeNumber);
    encode->add_option("--report", report_path, "Write a decode/re-encode roundtrip report here");
    encode->add_option("--report-strands", report_strands, "Strands decoded for the report (default: source count)");

    auto* decode = app.add_subcommand("decode-hair", "Grow strands from a hair code");
    std::string code_path;
    int strands = 200;
    double step = 0.0;
    decode->add_option("--code", code_path, "Hair code container")->required();
    decode->add_option("--strands", strands, "Number of strands")->check(CLI::PositiveNumber);
    decode->add_option("--step", step, "Integration step in meters (default: a quarter cell)");

    auto* fit_pca = app.add_subcommand("fit-pca", "PCA over HDR maps, hair codes or a data matrix");
    std::string kind = "matrix", tensor = "data";
    std::vector<std::string> pca_inputs;
    int k = 50, rotations = 5;
    fit_pca->add_option("--kind", kind, "Input kind")->check(CLI::IsMember({"hdr", "hair", "matrix"}));
    fit_pca->add_option("inputs", pca_inputs, "Input files")->required();
    fit_pca->add_option("-k,--components", k, "Components to keep")->check(CLI::PositiveNumber);
    fit_pca->add_option("--rotations", rotations, "Random yaw rotations per HDR")->check(CLI::PositiveNumber);
    fit_pca->add_option("--tensor", tensor, "Tensor name for matrix containers");

    auto* fit_gmm = app.add_subcommand("fit-gmm", "Fit a Gaussian mixture with EM");
    std::string data_path;
    int components = 1;
    double ridge = 1e-6;
    fit_gmm->add_option("--data", data_path, "CSV rows or a matrix container")->required();
    fit_gmm->add_option("--tensor", tensor, "Tensor name for matrix containers");
    fit_gmm->add_option("-k,--components", components, "Mixture components")->check(CLI::PositiveNumber);
    fit_gmm->add_option("--ridge", ridge, "Covariance ridge")->check(CLI::NonNegativeNumber);

    auto* pore = app.add_subcommand("pore-map", "Scale-normalized LoG response of a grayscale texture");
    double sigma = 2.0, threshold = 0.5;
    std::string extrema_path;
    pore->add_option("--in", input, "Input PGM")->required();
    pore->add_option("--sigma", sigma, "Gaussian scale in pixels");
    pore->add_option("--extrema", extrema_path, "Write local extrema as JSON here");
    pore->add_option("--threshold", threshold, "Extrema threshold as a fraction of the peak response");

    auto* demo = app.add_subcommand("demo-assets", "Write a synthetic asset library and scan set");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    log::set_json(g.json_logs);
    log::set_quiet(g.quiet);

    try {
        if (*fit) return run_fit(g, scans, base, identity_dim);
        if (*sample) return run_sample(g, library, count, levels);
        if (*exp) return run_export(g, library, scene_path, levels);
        if (*subdivide) return run_subdivide(g, input, subdiv_levels);
        if (*encode) return run_encode_hair(g, groom_path, uv_res, volume_res, margin, report_path, report_strands);
        if (*decode) return run_decode_hair(g, code_path, strands, step);
        if (*fit_pca) return run_fit_pca(g, kind, pca_inputs, k, rotations, tensor);
        if (*fit_gmm) return run_fit_gmm(g, data_path, tensor, components, ridge);
        if (*pore) return run_pore_map(g, input, sigma, extrema_path, threshold);
        if (*demo) return run_demo_assets(g);
    } catch (const Error& e) {
        log::error(e.detail(), to_string(e.code()));
        return exit_code(e);
    } catch (const fs::filesystem_error& e) {
        log::error(e.what(), "IoError");
        return 2;
    }
    return 1;
}
