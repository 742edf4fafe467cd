#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdm/bridge.hpp"
#include "fdm/checkpoint.hpp"
#include "fdm/cliconfig.hpp"
#include "fdm/common.hpp"
#include "fdm/gradcheck.hpp"
#include "fdm/io.hpp"
#include "fdm/layers.hpp"
#include "fdm/lowpass.hpp"
#include "fdm/maformer.hpp"
#include "fdm/metrics.hpp"
#include "fdm/msfa.hpp"
#include "fdm/rng.hpp"
#include "fdm/synth.hpp"
#include "fdm/train.hpp"

namespace {

using namespace fdm;

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("config: cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return std::move(os).str();
}

TrainConfig load_train_config(const std::string& path) {
    if (path.empty()) return TrainConfig{};
    return train_config_from_text(read_text_file(path));
}

struct LoadedNet {
    std::unique_ptr<ParamStore> ps;
    std::unique_ptr<MaFormer> net;
    ModelConfig model;
};

LoadedNet net_from_checkpoint(const std::string& path) {
    CheckpointData data = load_checkpoint(path);
    LoadedNet out;
    out.model = config_from_text(data.config_text);
    out.ps = std::make_unique<ParamStore>();
    out.net = std::make_unique<MaFormer>(*out.ps, out.model);
    restore_params(*out.ps, data);
    return out;
}

double weighted_sum(const Tensor& y, const Tensor& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) acc += y.v[i] * w.v[i];
    return acc;
}

// Fresh normal weights with biases pushed off zero so no activation sits on a
// kink during differencing.
void randomize(ParamStore& ps, Rng& rng) {
    init_params(ps, rng);
    for (std::size_t i = 0; i < ps.size(); ++i)
        if (ps.name(i).ends_with(".bias"))
            for (double& x : ps.param(i).v) x = rng.uniform(0.05, 0.15);
}

std::vector<std::pair<std::string, Tensor*>> all_params(ParamStore& ps) {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t i = 0; i < ps.size(); ++i) out.emplace_back(ps.name(i), &ps.param(i));
    return out;
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.v) v = rng.uniform(lo, hi);
    return t;
}

template <class Block>
GradCheckReport check_block(Block& block, ParamStore& ps, Tensor& x, Rng& rng) {
    Tensor y0 = block.forward(x);
    Tensor w = random_tensor(y0.dims, rng, -1.0, 1.0);
    auto eval = [&] { return weighted_sum(block.forward(x), w); };
    auto grads = [&] {
        ps.zero_grads();
        x.ensure_grad();
        x.zero_grad();
        block.forward(x);
        Tensor gx = block.backward(w);
        x.g = gx.v;
    };
    auto probes = all_params(ps);
    probes.emplace_back("input", &x);
    return fd_gradcheck(eval, grads, probes, 1e-5, 1e-4, rng, 12);
}

int run_gradcheck(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<std::string, GradCheckReport>> results;

    {
        ParamStore ps;
        MsfaConv conv(ps, "conv", 3, 4, 2, 3, 8);
        randomize(ps, rng);
        Tensor x = random_tensor({1, 3, 8, 8}, rng);
        results.emplace_back("msfa_conv", check_block(conv, ps, x, rng));
    }
    {
        ParamStore ps;
        Tensor x = random_tensor({1, 3, 8, 8}, rng);
        Tensor w = random_tensor({1, 3, 4, 4}, rng, -1.0, 1.0);
        auto eval = [&] { return weighted_sum(msfa_pool(x, 2), w); };
        auto grads = [&] {
            x.ensure_grad();
            x.zero_grad();
            Tensor gx = msfa_pool_backward(w, 2, 8, 8);
            x.g = gx.v;
        };
        std::vector<std::pair<std::string, Tensor*>> probes{{"input", &x}};
        results.emplace_back("msfa_pool", fd_gradcheck(eval, grads, probes, 1e-5, 1e-4, rng, 24));
    }
    {
        ParamStore ps;
        PeriodicBranch pb(ps, "pb", 4, 2, 3, 8);
        randomize(ps, rng);
        Tensor x = random_tensor({1, 4, 8, 8}, rng);
        results.emplace_back("periodic_branch", check_block(pb, ps, x, rng));
    }
    {
        ParamStore ps;
        SwinBlock sb(ps, "swin", 8, 4, 2, 2, 2);
        randomize(ps, rng);
        Tensor x = random_tensor({1, 8, 8, 8}, rng);
        results.emplace_back("swin_block", check_block(sb, ps, x, rng));
    }
    {
        ParamStore ps;
        Stmc block(ps, "stmc", 8, 2, 4, 2, 2, 8, 3, 0);
        randomize(ps, rng);
        Tensor x = random_tensor({1, 8, 8, 8}, rng);
        results.emplace_back("stmc", check_block(block, ps, x, rng));
    }

    int failures = 0;
    for (const auto& [name, rep] : results) {
        if (rep.ok) {
            std::printf("ok   %-16s max_rel=%.3g over %d coords\n", name.c_str(), rep.max_rel_err,
                        rep.checked);
        } else {
            std::printf("FAIL %-16s max_rel=%.3g at %s %s\n", name.c_str(), rep.max_rel_err,
                        rep.worst_coord.c_str(), rep.note.c_str());
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

void print_eval_row(const std::string& file, const char* method, const MetricReport& r) {
    std::printf("%-20s %-9s %8.4f %8.4f %8.4f %8.4f\n", file.c_str(), method, r.psnr, r.ssim,
                r.sam, r.mrae);
}

nlohmann::json metric_json(const std::string& file, const char* method, const MetricReport& r) {
    return nlohmann::json{{"file", file},   {"method", method}, {"psnr", r.psnr},
                          {"ssim", r.ssim}, {"sam", r.sam},     {"mrae", r.mrae}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MSFA demosaicing toolkit: frequency-split mosaic-to-cube reconstruction"};
    app.require_subcommand(1);

    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic hyperspectral cube");
    std::uint64_t synth_seed = 0;
    int synth_rows = 64, synth_cols = 64, synth_bands = 16;
    std::string synth_out;
    c_synth->add_option("--seed", synth_seed, "Random seed");
    c_synth->add_option("--rows", synth_rows, "Cube rows");
    c_synth->add_option("--cols", synth_cols, "Cube columns");
    c_synth->add_option("--bands", synth_bands, "Cube bands");
    c_synth->add_option("--out", synth_out, "Output .hsic path")->required();

    auto* c_mosaic = app.add_subcommand("mosaic", "Simulate the sensor mosaic of a cube");
    std::string mosaic_in, mosaic_out, mosaic_cfg;
    c_mosaic->add_option("input", mosaic_in, "Input .hsic cube")->required();
    c_mosaic->add_option("--out", mosaic_out, "Output .mosa path")->required();
    c_mosaic->add_option("--config", mosaic_cfg, "key=value config file");

    auto* c_demosaic = app.add_subcommand("demosaic", "Reconstruct a cube from a mosaic");
    std::string dm_in, dm_out, dm_cfg, dm_ckpt, dm_method;
    c_demosaic->add_option("input", dm_in, "Input .mosa file")->required();
    c_demosaic->add_option("--method", dm_method, "bilinear, lowpass, or fdm")
        ->required()
        ->check(CLI::IsMember({"bilinear", "lowpass", "fdm"}));
    c_demosaic->add_option("--out", dm_out, "Output .hsic path")->required();
    c_demosaic->add_option("--ckpt", dm_ckpt, "Model checkpoint (fdm method)");
    c_demosaic->add_option("--config", dm_cfg, "key=value config file");

    auto* c_train = app.add_subcommand("train", "Train the high-pass network");
    std::vector<std::string> train_files;
    std::string train_cfg, train_out, train_trace;
    std::uint64_t train_seed = 0;
    c_train->add_option("cubes", train_files, "Training .hsic cubes")->required();
    c_train->add_option("--seed", train_seed, "Random seed");
    c_train->add_option("--config", train_cfg, "key=value config file");
    c_train->add_option("--out", train_out, "Output checkpoint path")->required();
    c_train->add_option("--trace", train_trace, "Loss trace CSV path");

    auto* c_eval = app.add_subcommand("eval", "Score reconstructions against references");
    std::vector<std::string> eval_files;
    std::string eval_cfg, eval_ckpt, eval_json;
    c_eval->add_option("cubes", eval_files, "Reference .hsic cubes")->required();
    c_eval->add_option("--ckpt", eval_ckpt, "Model checkpoint")->required();
    c_eval->add_option("--config", eval_cfg, "key=value config file");
    c_eval->add_option("--json", eval_json, "Write the metric table as JSON");

    auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of every block");
    std::uint64_t grad_seed = 3;
    c_grad->add_option("--seed", grad_seed, "Random seed");

    auto* c_false = app.add_subcommand("export-falsecolor", "Render three bands as RGB");
    std::string fc_in, fc_out;
    std::vector<int> fc_bands{2, 11, 16};
    c_false->add_option("input", fc_in, "Input .hsic cube")->required();
    c_false->add_option("--out", fc_out, "Output .png or .ppm path")->required();
    c_false->add_option("--bands", fc_bands, "1-based R,G,B band indices")
        ->expected(3)
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::fputs(app.help().c_str(), stderr);
        return 2;
    }

    try {
        if (*c_synth) {
            SceneSpec spec;
            spec.rows = synth_rows;
            spec.cols = synth_cols;
            spec.bands = synth_bands;
            spec.seed = synth_seed;
            save_hsic(synth_out, generate_scene(spec).cube);
            std::printf("wrote %s (%dx%dx%d)\n", synth_out.c_str(), spec.rows, spec.cols,
                        spec.bands);
        } else if (*c_mosaic) {
            TrainConfig cfg = load_train_config(mosaic_cfg);
            HsiCube cube = load_hsic(mosaic_in);
            MsfaPattern pat = rowmajor_pattern(cfg.model.period, cube.bands);
            save_mosaic(mosaic_out, mosaic(cube, pat));
            std::printf("wrote %s (%dx%d, period %d)\n", mosaic_out.c_str(), cube.rows, cube.cols,
                        pat.p);
        } else if (*c_demosaic) {
            if (dm_method == "fdm" && dm_ckpt.empty()) {
                std::fputs("demosaic: --ckpt is required with --method fdm\n", stderr);
                std::fputs(c_demosaic->help().c_str(), stderr);
                return 2;
            }
            TrainConfig cfg = load_train_config(dm_cfg);
            MosaicImage mos = load_mosaic(dm_in);
            HsiCube cube;
            if (dm_method == "bilinear") {
                cube = bilinear_demosaic(mos);
            } else if (dm_method == "lowpass") {
                cube = reconstruct_lowpass(mos, cfg.lowpass);
            } else {
                LoadedNet ln = net_from_checkpoint(dm_ckpt);
                cfg.model = ln.model;
                cube = predict(*ln.net, mos, cfg);
            }
            save_hsic(dm_out, cube);
            std::printf("wrote %s (%dx%dx%d, %s)\n", dm_out.c_str(), cube.rows, cube.cols,
                        cube.bands, dm_method.c_str());
        } else if (*c_train) {
            TrainConfig cfg = load_train_config(train_cfg);
            cfg.seed = train_seed;
            cfg.out_checkpoint = train_out;
            cfg.out_trace = train_trace;
            std::vector<HsiCube> data;
            data.reserve(train_files.size());
            for (const std::string& f : train_files) data.push_back(load_hsic(f));
            ParamStore ps;
            MaFormer net(ps, cfg.model);
            Rng rng(cfg.seed);
            init_params(ps, rng);
            TrainResult res = train(data, ps, net, cfg);
            for (const HoldoutRow& h : res.holdout)
                std::printf("step %d holdout psnr %.2f\n", h.step, h.psnr);
            if (res.aborted) {
                std::fprintf(stderr, "train: non-finite loss at step %d; parameters rolled back\n",
                             res.steps_run + 1);
                return 1;
            }
            double final_total = res.trace.empty() ? 0.0 : res.trace.back().terms.total;
            std::printf("trained %d steps, final total loss %.6g, checkpoint %s\n", res.steps_run,
                        final_total, train_out.c_str());
        } else if (*c_eval) {
            TrainConfig cfg = load_train_config(eval_cfg);
            LoadedNet ln = net_from_checkpoint(eval_ckpt);
            cfg.model = ln.model;
            std::vector<HsiCube> data;
            data.reserve(eval_files.size());
            for (const std::string& f : eval_files) data.push_back(load_hsic(f));
            EvalTable tab = evaluate(data, *ln.net, cfg);

            std::printf("%-20s %-9s %8s %8s %8s %8s\n", "file", "method", "PSNR↑",
                        "SSIM↑", "SAM↓", "MRAE↓");
            nlohmann::json arr = nlohmann::json::array();
            for (std::size_t i = 0; i < tab.rows.size(); ++i) {
                const EvalRow& r = tab.rows[i];
                const std::string& f = eval_files[i];
                print_eval_row(f, "fdm", r.fdm);
                print_eval_row(f, "bilinear", r.bilinear);
                print_eval_row(f, "lowpass", r.lowpass);
                arr.push_back(metric_json(f, "fdm", r.fdm));
                arr.push_back(metric_json(f, "bilinear", r.bilinear));
                arr.push_back(metric_json(f, "lowpass", r.lowpass));
            }
            if (tab.rows.size() > 1) {
                print_eval_row("average", "fdm", tab.average.fdm);
                print_eval_row("average", "bilinear", tab.average.bilinear);
                print_eval_row("average", "lowpass", tab.average.lowpass);
                arr.push_back(metric_json("average", "fdm", tab.average.fdm));
                arr.push_back(metric_json("average", "bilinear", tab.average.bilinear));
                arr.push_back(metric_json("average", "lowpass", tab.average.lowpass));
            }
            if (!eval_json.empty()) {
                std::ofstream os(eval_json, std::ios::binary);
                if (!os) fail("eval: cannot open " + eval_json + " for writing");
                os << arr.dump(2) << "\n";
            }
        } else if (*c_grad) {
            return run_gradcheck(grad_seed);
        } else if (*c_false) {
            HsiCube cube = load_hsic(fc_in);
            export_falsecolor(cube, fc_bands[0], fc_bands[1], fc_bands[2], fc_out);
            std::printf("wrote %s (bands %d,%d,%d)\n", fc_out.c_str(), fc_bands[0], fc_bands[1],
                        fc_bands[2]);
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
