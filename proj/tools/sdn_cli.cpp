// sdn: batch commands for score-based point cloud denoising.
//
// Exit codes: 0 success, 2 input/parse error, 3 training divergence,
// 4 inference numeric failure, 5 evaluation frame mismatch.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdn/sdn.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitTrainDiverged = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitFrameMismatch = 5;

// Flat `key = value` config support: values from the file become defaults,
// injected right after the subcommand token; flags given on the command line
// win. Unknown keys surface as unrecognized arguments. Sections and nesting
// are rejected.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    if (args.size() < 2 || args[1].starts_with('-')) return args;

    std::string config_path;
    std::vector<std::string> present;  // --flags literally on the command line
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i].starts_with("--")) present.push_back(args[i].substr(0, args[i].find('=')));
        if (args[i] == "--config" && i + 1 < args.size() && config_path.empty())
            config_path = args[i + 1];
        else if (args[i].starts_with("--config=") && config_path.empty())
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file " + config_path);
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::vector<std::string> injected;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string text = trim(line.substr(0, line.find('#')));
        if (text.empty()) continue;
        if (text.front() == '[')
            throw std::runtime_error(config_path + ":" + std::to_string(lineno) +
                                     ": sections are not supported (flat key = value only)");
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(config_path + ":" + std::to_string(lineno) +
                                     ": expected `key = value`");
        const std::string key = "--" + trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key == "--" || value.empty())
            throw std::runtime_error(config_path + ":" + std::to_string(lineno) +
                                     ": expected `key = value`");
        if (std::find(present.begin(), present.end(), key) != present.end()) continue;
        injected.push_back(key);
        injected.push_back(value);
    }
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    return args;
}

struct NetOptions {
    int graph_k = 16;
    std::vector<int> blocks = {32, 64, 128};
    std::vector<int> hidden = {128, 64};

    sdn::NetworkConfig config() const { return {graph_k, blocks, hidden}; }

    void bind(CLI::App* cmd) {
        cmd->add_option("--graph-k", graph_k, "kNN graph size of the feature extractor");
        cmd->add_option("--blocks", blocks, "graph block widths")->delimiter(',');
        cmd->add_option("--hidden", hidden, "score MLP hidden widths")->delimiter(',');
    }
};

struct DenoiseOptions {
    int ensemble_k = 4;
    double alpha1 = 0.2;
    double gamma = 0.95;
    int steps = 30;
    int patch_size = 1000;
    double coverage = 3.0;
    std::string mode = "ascent";

    sdn::DenoiseConfig config() const {
        sdn::DenoiseConfig cfg;
        cfg.ensemble_k = ensemble_k;
        cfg.schedule = sdn::StepSchedule{alpha1, gamma, steps};
        cfg.patch_size = patch_size;
        cfg.coverage_ratio = coverage;
        cfg.mode = mode == "direct" ? sdn::DenoiseConfig::Mode::DirectDisplacement
                                    : sdn::DenoiseConfig::Mode::GradientAscent;
        return cfg;
    }

    void bind(CLI::App* cmd) {
        cmd->add_option("--K", ensemble_k, "ensemble size (anchors averaged per point)");
        cmd->add_option("--alpha1", alpha1, "first gradient-ascent step size, in (0,1)");
        cmd->add_option("--gamma", gamma, "step decay factor, in (0,1]");
        cmd->add_option("--steps", steps, "number of gradient-ascent steps (>= 1)");
        cmd->add_option("--patch-size", patch_size, "points per patch");
        cmd->add_option("--coverage", coverage, "patch coverage ratio");
        cmd->add_option("--mode", mode, "update rule: ascent | direct")
            ->check(CLI::IsMember({"ascent", "direct"}));
    }
};

std::string format_transform(const sdn::NormalizationTransform& t) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "center = (%.6g, %.6g, %.6g), scale = %.6g", t.center.x,
                  t.center.y, t.center.z, t.scale);
    return buf;
}

sdn::Checkpoint load_checkpoint_arg(const std::string& path) {
    return sdn::load_checkpoint(fs::path(path));
}

// ---------------------------------------------------------------------------

struct MakeDataArgs {
    std::string mesh_path, out_dir, name = "shape";
    int count = 2000;
    std::string noise = "gaussian:0.02";
    std::string method = "poisson";
    double oversample = 4.0;
    std::uint64_t seed = 0;
};

int cmd_make_data(const MakeDataArgs& a) {
    const sdn::TriangleMesh mesh = sdn::load_obj_file(a.mesh_path);
    sdn::SamplingConfig scfg;
    scfg.target_count = a.count;
    scfg.oversample_factor = a.oversample;
    scfg.method = a.method == "uniform" ? sdn::SamplingConfig::Method::UniformArea
                                        : sdn::SamplingConfig::Method::PoissonDisk;
    const sdn::PointCloud raw = sdn::sample_surface(mesh, scfg, {a.seed});
    const auto [clean, transform] = sdn::normalize_unit_sphere(raw);

    const sdn::NoiseModel model = sdn::parse_noise_spec(a.noise);
    const sdn::PointCloud noisy = sdn::perturb(clean, model, {a.seed});

    fs::create_directories(a.out_dir);
    const fs::path clean_path = fs::path(a.out_dir) / (a.name + "_clean.xyz");
    const fs::path noisy_path = fs::path(a.out_dir) / (a.name + "_noisy.xyz");
    const fs::path mesh_path = fs::path(a.out_dir) / (a.name + "_mesh.obj");
    sdn::write_xyz_file(clean_path, clean);
    sdn::write_xyz_file(noisy_path, noisy);

    // the reference mesh mapped into the same unit-sphere frame, for P2M
    sdn::TriangleMesh normalized_mesh = mesh;
    for (auto& v : normalized_mesh.vertices) v = transform.apply(v);
    sdn::write_file_atomic(mesh_path, sdn::format_obj(normalized_mesh));

    std::cout << "mesh-to-sphere transform: " << format_transform(transform) << "\n";
    std::cout << "wrote " << clean_path.string() << " (" << clean.size() << " points)\n";
    std::cout << "wrote " << noisy_path.string() << " (" << noisy.size() << " points)\n";
    std::cout << "wrote " << mesh_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data_dir, out_checkpoint;
    std::string loss_csv;
    std::string loss = "neighborhood";
    int steps = 2000;
    double sigma_min = 0.005, sigma_max = 0.02;
    int anchors = 128, samples = 8;
    double lr = 1e-3;
    int patch_size = 1000;
    double coverage = 3.0;
    std::uint64_t seed = 0;
    NetOptions net;
};

int cmd_train(const TrainArgs& a) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.data_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".xyz") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    // prefer *_clean.xyz when the directory holds clean/noisy pairs
    std::vector<fs::path> clean_files;
    for (const auto& f : files)
        if (f.filename().string().ends_with("_clean.xyz")) clean_files.push_back(f);
    if (!clean_files.empty()) files = std::move(clean_files);
    if (files.empty()) throw std::runtime_error("no .xyz clouds found in " + a.data_dir);

    std::vector<sdn::PointCloud> patch_pool;
    for (const auto& f : files) {
        const sdn::PointCloud normalized = sdn::normalize_unit_sphere(sdn::read_xyz_file(f)).first;
        for (const auto& patch : sdn::extract_patches(normalized, a.patch_size, a.coverage)) {
            sdn::PointCloud pts;
            pts.reserve(patch.indices.size());
            for (int i : patch.indices) pts.push_back(normalized[i]);
            patch_pool.push_back(std::move(pts));
        }
    }

    sdn::TrainConfig tc;
    tc.sigma_min = a.sigma_min;
    tc.sigma_max = a.sigma_max;
    tc.anchors_per_patch = a.anchors;
    tc.neighborhood_samples = a.samples;
    tc.learning_rate = a.lr;
    tc.iterations = a.steps;
    tc.loss = a.loss == "point-only" ? sdn::TrainConfig::LossVariant::PointOnly
                                     : sdn::TrainConfig::LossVariant::Neighborhood;

    const sdn::NetworkConfig net = a.net.config();
    std::cout << "training on " << patch_pool.size() << " patches from " << files.size()
              << " clouds, " << a.steps << " steps\n";
    const sdn::TrainResult result = sdn::train(patch_pool, tc, net, {a.seed});

    sdn::Checkpoint ckpt{net, result.params,
                         {{"loss", a.loss}, {"seed", std::to_string(a.seed)}}};
    sdn::save_checkpoint(a.out_checkpoint, ckpt);
    std::cout << "wrote " << a.out_checkpoint << "\n";
    if (!a.loss_csv.empty()) {
        sdn::write_file_atomic(a.loss_csv, sdn::format_loss_csv(result.loss_history));
        std::cout << "wrote " << a.loss_csv << "\n";
    }
    if (!result.loss_history.empty()) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "final loss %.9g\n", result.loss_history.back().second);
        std::cout << buf;
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct DenoiseArgs {
    std::string input, checkpoint, out;
    std::string errors_out, mesh_path;
    std::uint64_t seed = 0;
    DenoiseOptions opts;
};

int cmd_denoise(const DenoiseArgs& a) {
    if (!a.errors_out.empty() && a.mesh_path.empty())
        throw std::runtime_error("--errors-out needs --mesh for the reference surface");
    const sdn::PointCloud input = sdn::read_xyz_file(a.input);
    const sdn::Checkpoint ckpt = load_checkpoint_arg(a.checkpoint);
    const sdn::DenoiseConfig cfg = a.opts.config();
    const sdn::PointCloud denoised = sdn::denoise_cloud(input, ckpt.params, ckpt.cfg, cfg);
    sdn::write_xyz_file(a.out, denoised);
    std::cout << "wrote " << a.out << " (" << denoised.size() << " points)\n";

    if (!a.errors_out.empty()) {
        const sdn::TriangleMesh mesh = sdn::load_obj_file(a.mesh_path);
        const sdn::MeshDistance dist(mesh);
        const sdn::PointCloud normalized = sdn::normalize_unit_sphere(denoised).first;
        std::string out;
        char buf[128];
        for (std::size_t i = 0; i < denoised.size(); ++i) {
            const double err = std::sqrt(dist.point_to_mesh_sq(normalized[i]));
            std::snprintf(buf, sizeof(buf), "%.6g %.6g %.6g %.6g\n", denoised[i].x, denoised[i].y,
                          denoised[i].z, err);
            out += buf;
        }
        sdn::write_file_atomic(a.errors_out, out);
        std::cout << "wrote " << a.errors_out << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string denoised, clean, mesh_path, out_csv;
    std::string shape = "shape", noise = "unknown";
};

int cmd_evaluate(const EvaluateArgs& a) {
    const sdn::PointCloud denoised = sdn::read_xyz_file(a.denoised);
    const sdn::PointCloud clean = sdn::read_xyz_file(a.clean);
    sdn::TriangleMesh mesh;
    const bool with_mesh = !a.mesh_path.empty();
    if (with_mesh) mesh = sdn::load_obj_file(a.mesh_path);
    sdn::require_unit_frame(clean, with_mesh ? &mesh : nullptr);

    const sdn::EvalReport report =
        sdn::evaluate(denoised, clean, with_mesh ? &mesh : nullptr, a.shape, a.noise);
    const std::string csv = sdn::EvalReport::csv_header() + "\n" + report.csv_row() + "\n";
    std::cout << csv << report.table();
    if (!a.out_csv.empty()) {
        sdn::write_file_atomic(a.out_csv, csv);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct UpsampleArgs {
    std::string input, checkpoint, out;
    int rate = 4;
    double sigma = 0.01;
    std::uint64_t seed = 0;
    DenoiseOptions opts;
};

int cmd_upsample(const UpsampleArgs& a) {
    const sdn::PointCloud input = sdn::read_xyz_file(a.input);
    const sdn::Checkpoint ckpt = load_checkpoint_arg(a.checkpoint);
    const sdn::PointCloud out =
        sdn::upsample_via_denoise(input, a.rate, a.sigma, ckpt.params, ckpt.cfg, a.opts.config(),
                                  {a.seed});
    sdn::write_xyz_file(a.out, out);
    std::cout << "wrote " << a.out << " (" << out.size() << " points)\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ScoreFieldArgs {
    std::string out;
    std::string checkpoint, input;
    double plane_sigma = 0.0;
    std::string empirical;
    double sigma = 0.05;
    int grid = 9;
    double extent = 1.0;
    int ensemble_k = 4;
};

int cmd_score_field(const ScoreFieldArgs& a) {
    std::function<sdn::Vec3(const sdn::Point3&)> field;

    std::shared_ptr<sdn::NetworkScoreSource> net_source;
    std::unique_ptr<sdn::ScoreField> net_field;
    std::unique_ptr<sdn::SpatialIndex> anchor_index;
    sdn::PointCloud anchors;

    if (a.plane_sigma > 0.0) {
        const sdn::PlaneGaussianModel model{a.plane_sigma};
        field = [model](const sdn::Point3& x) { return sdn::plane_score(model, x); };
    } else if (!a.empirical.empty()) {
        sdn::EmpiricalConvolvedModel model;
        model.support = sdn::normalize_unit_sphere(sdn::read_xyz_file(a.empirical)).first;
        model.sigma = a.sigma;
        field = [model](const sdn::Point3& x) { return sdn::empirical_score(model, x); };
    } else if (!a.checkpoint.empty() && !a.input.empty()) {
        const sdn::Checkpoint ckpt = load_checkpoint_arg(a.checkpoint);
        anchors = sdn::normalize_unit_sphere(sdn::read_xyz_file(a.input)).first;
        auto params = std::make_shared<const sdn::ScoreNetworkParams>(ckpt.params);
        net_source = std::make_shared<sdn::NetworkScoreSource>(anchors, params, ckpt.cfg);
        net_field = std::make_unique<sdn::ScoreField>(net_source, anchors, a.ensemble_k);
        anchor_index = std::make_unique<sdn::SpatialIndex>(anchors);
        field = [&](const sdn::Point3& x) {
            return net_field->ensemble_score(anchor_index->nearest(x), x);
        };
    } else {
        throw std::runtime_error(
            "score-field needs --plane-sigma, --empirical, or --checkpoint with --input");
    }

    std::string out;
    char buf[192];
    for (int ix = 0; ix < a.grid; ++ix)
        for (int iy = 0; iy < a.grid; ++iy)
            for (int iz = 0; iz < a.grid; ++iz) {
                auto coord = [&](int i) {
                    return a.grid == 1 ? 0.0 : -a.extent + 2.0 * a.extent * i / (a.grid - 1);
                };
                const sdn::Point3 p{coord(ix), coord(iy), coord(iz)};
                const sdn::Vec3 s = field(p);
                std::snprintf(buf, sizeof(buf), "%.6g %.6g %.6g %.6g %.6g %.6g\n", p.x, p.y, p.z,
                              s.x, s.y, s.z);
                out += buf;
            }
    sdn::write_file_atomic(a.out, out);
    std::cout << "wrote " << a.out << " (" << a.grid * a.grid * a.grid << " probes)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"score-based point cloud denoising"};
    app.require_subcommand(1);

    MakeDataArgs md;
    auto* make_data = app.add_subcommand(
        "make-data", "sample a mesh surface and write clean/noisy clouds in the unit-sphere frame");
    make_data->add_option("--mesh", md.mesh_path, "input OBJ mesh")->required();
    make_data->add_option("--out-dir", md.out_dir, "output directory")->required();
    make_data->add_option("--name", md.name, "output name prefix");
    make_data->add_option("--count", md.count, "number of surface samples");
    make_data->add_option("--noise", md.noise, "noise spec, e.g. gaussian:0.02");
    make_data->add_option("--method", md.method, "sampling method: poisson | uniform")
        ->check(CLI::IsMember({"poisson", "uniform"}));
    make_data->add_option("--oversample", md.oversample, "Poisson-disk oversampling factor");
    make_data->add_option("--seed", md.seed, "random seed");
    std::string config_sink;
    make_data->add_option("--config", config_sink, "flat key=value config file (flags win)");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train a score network on clean clouds");
    train_cmd->add_option("--data-dir", tr.data_dir, "directory of clean .xyz clouds")->required();
    train_cmd->add_option("--out", tr.out_checkpoint, "output checkpoint path")->required();
    train_cmd->add_option("--loss-csv", tr.loss_csv, "write per-step loss CSV here");
    train_cmd->add_option("--steps", tr.steps, "optimizer steps");
    train_cmd->add_option("--loss", tr.loss, "objective: neighborhood | point-only")
        ->check(CLI::IsMember({"neighborhood", "point-only"}));
    train_cmd->add_option("--sigma-min", tr.sigma_min, "training noise lower bound");
    train_cmd->add_option("--sigma-max", tr.sigma_max, "training noise upper bound");
    train_cmd->add_option("--anchors", tr.anchors, "anchors per patch");
    train_cmd->add_option("--samples", tr.samples, "neighborhood samples per anchor");
    train_cmd->add_option("--lr", tr.lr, "learning rate");
    train_cmd->add_option("--patch-size", tr.patch_size, "points per training patch");
    train_cmd->add_option("--coverage", tr.coverage, "patch coverage ratio");
    train_cmd->add_option("--seed", tr.seed, "random seed");
    tr.net.bind(train_cmd);
    train_cmd->add_option("--config", config_sink, "flat key=value config file (flags win)");

    DenoiseArgs dn;
    auto* denoise_cmd = app.add_subcommand("denoise", "denoise a noisy cloud with a checkpoint");
    denoise_cmd->add_option("--input", dn.input, "noisy .xyz cloud")->required();
    denoise_cmd->add_option("--checkpoint", dn.checkpoint, "trained checkpoint")->required();
    denoise_cmd->add_option("--out", dn.out, "output .xyz path")->required();
    denoise_cmd->add_option("--errors-out", dn.errors_out,
                            "write per-point `x y z err` (needs --mesh)");
    denoise_cmd->add_option("--mesh", dn.mesh_path, "reference OBJ for the error dump");
    denoise_cmd->add_option("--seed", dn.seed, "random seed (unused; kept for uniformity)");
    dn.opts.bind(denoise_cmd);
    denoise_cmd->add_option("--config", config_sink, "flat key=value config file (flags win)");

    EvaluateArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "Chamfer/P2M report against a clean reference");
    eval_cmd->add_option("--denoised", ev.denoised, "denoised .xyz cloud")->required();
    eval_cmd->add_option("--clean", ev.clean, "clean reference .xyz (unit-sphere frame)")->required();
    eval_cmd->add_option("--mesh", ev.mesh_path, "reference OBJ mesh for P2M");
    eval_cmd->add_option("--out", ev.out_csv, "also write the CSV report here");
    eval_cmd->add_option("--shape", ev.shape, "shape id for the report");
    eval_cmd->add_option("--noise", ev.noise, "noise label for the report");
    eval_cmd->add_option("--config", config_sink, "flat key=value config file (flags win)");

    UpsampleArgs up;
    auto* upsample_cmd = app.add_subcommand("upsample", "upsample by denoising jittered copies");
    upsample_cmd->add_option("--input", up.input, "sparse .xyz cloud")->required();
    upsample_cmd->add_option("--checkpoint", up.checkpoint, "trained checkpoint")->required();
    upsample_cmd->add_option("--out", up.out, "output .xyz path")->required();
    upsample_cmd->add_option("--rate", up.rate, "upsampling rate r (output has r*N points)");
    upsample_cmd->add_option("--sigma", up.sigma, "jitter sigma, fraction of bounding radius");
    upsample_cmd->add_option("--seed", up.seed, "random seed");
    up.opts.bind(upsample_cmd);
    upsample_cmd->add_option("--config", config_sink, "flat key=value config file (flags win)");

    ScoreFieldArgs sfargs;
    auto* field_cmd = app.add_subcommand("score-field", "dump `x y z sx sy sz` over a probe grid");
    field_cmd->add_option("--out", sfargs.out, "output path")->required();
    field_cmd->add_option("--checkpoint", sfargs.checkpoint, "score network checkpoint");
    field_cmd->add_option("--input", sfargs.input, "cloud defining the network field anchors");
    field_cmd->add_option("--plane-sigma", sfargs.plane_sigma, "dump the plane oracle with this sigma");
    field_cmd->add_option("--empirical", sfargs.empirical, "dump the empirical oracle of this cloud");
    field_cmd->add_option("--sigma", sfargs.sigma, "empirical oracle sigma");
    field_cmd->add_option("--grid", sfargs.grid, "probe grid resolution per axis");
    field_cmd->add_option("--extent", sfargs.extent, "probe grid half-extent");
    field_cmd->add_option("--K", sfargs.ensemble_k, "ensemble size for network fields");
    field_cmd->add_option("--config", config_sink, "flat key=value config file (flags win)");

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        reversed.pop_back();  // program name
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (make_data->parsed()) return cmd_make_data(md);
        if (train_cmd->parsed()) {
            try {
                return cmd_train(tr);
            } catch (const sdn::NumericError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitTrainDiverged;
            }
        }
        if (denoise_cmd->parsed()) return cmd_denoise(dn);
        if (eval_cmd->parsed()) return cmd_evaluate(ev);
        if (upsample_cmd->parsed()) return cmd_upsample(up);
        if (field_cmd->parsed()) return cmd_score_field(sfargs);
    } catch (const sdn::FrameMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFrameMismatch;
    } catch (const sdn::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}
