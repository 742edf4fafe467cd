#include "fdm/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "fdm/bridge.hpp"
#include "fdm/checkpoint.hpp"
#include "fdm/common.hpp"
#include "fdm/optim.hpp"

namespace fdm {

void TrainConfig::validate() const {
    model.validate();
    weights.validate();
    lowpass.validate();
    int quantum = 8 * model.window;
    check(patch > 0 && patch % quantum == 0,
          "train config: patch size must be a positive multiple of 8x the attention window");
    check(batch >= 1, "train config: batch size must be at least 1");
    check(steps >= 0, "train config: negative step count");
    check(lr0 > 0.0, "train config: learning rate must be positive");
    check(halve_every >= 1, "train config: halving interval must be at least 1 epoch");
    check(log_every >= 1, "train config: log interval must be at least 1");
    check(eval_every >= 0 && checkpoint_every >= 0, "train config: negative interval");
}

long epoch_of_step(const TrainConfig& cfg, long completed_steps, std::size_t dataset_size) {
    check(dataset_size > 0, "epoch_of_step: empty dataset");
    return completed_steps * cfg.batch / static_cast<long>(dataset_size);
}

std::vector<PatchSample> sample_patches(const std::vector<HsiCube>& cubes,
                                        const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    check(!cubes.empty(), "sample_patches: empty dataset");
    const int p = cfg.model.period;
    MsfaPattern pat = rowmajor_pattern(p, cfg.model.bands);
    SampleMask mask = sample_mask(cfg.patch, cfg.patch, pat);

    std::vector<PatchSample> out;
    out.reserve(static_cast<std::size_t>(cfg.batch));
    for (int b = 0; b < cfg.batch; ++b) {
        int ci = rng.uniform_int(0, static_cast<int>(cubes.size()) - 1);
        const HsiCube& cube = cubes[static_cast<std::size_t>(ci)];
        check(cube.bands == cfg.model.bands, "sample_patches: cube band count does not match the model");
        check(cube.rows >= cfg.patch && cube.cols >= cfg.patch,
              "sample_patches: cube smaller than the patch size");
        int i0 = p * rng.uniform_int(0, (cube.rows - cfg.patch) / p);
        int j0 = p * rng.uniform_int(0, (cube.cols - cfg.patch) / p);

        HsiCube ref(cfg.patch, cfg.patch, cube.bands);
        for (int k = 0; k < cube.bands; ++k)
            for (int i = 0; i < cfg.patch; ++i)
                for (int j = 0; j < cfg.patch; ++j) ref.at(i, j, k) = cube.at(i0 + i, j0 + j, k);

        PatchSample s;
        s.mosaic = mosaic(ref, pat);
        s.ref = std::move(ref);
        s.mask = mask;
        s.cube_index = ci;
        s.row0 = i0;
        s.col0 = j0;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::vector<std::vector<double>> snapshot(const ParamStore& ps) {
    std::vector<std::vector<double>> out(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) out[i] = ps.param(i).v;
    return out;
}

void restore(ParamStore& ps, const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < ps.size(); ++i) ps.param(i).v = snap[i];
}

void require_matching_model(const MaFormer& net, const TrainConfig& cfg, const char* who) {
    if (config_to_text(net.config()) != config_to_text(cfg.model))
        check(false, std::string(who) + ": model does not match the configuration");
}

void write_text(const std::string& path, const std::string& body, const char* what) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(std::string(what) + ": cannot open " + path + " for writing");
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!os) fail(std::string(what) + ": write failure on " + path);
}

void add_report(MetricReport& acc, const MetricReport& r) {
    acc.psnr += r.psnr;
    acc.ssim += r.ssim;
    acc.sam += r.sam;
    acc.mrae += r.mrae;
}

void scale_report(MetricReport& r, double s) {
    r.psnr *= s;
    r.ssim *= s;
    r.sam *= s;
    r.mrae *= s;
}

}  // namespace

HsiCube predict(MaFormer& net, const MosaicImage& mos, const TrainConfig& cfg) {
    Tensor y = net.forward(mosaic_to_tensor(mos));
    HsiCube pred = tensor_item_to_cube(y, 0);
    if (!cfg.blind) {
        HsiCube low = reconstruct_lowpass(mos, cfg.lowpass);
        for (std::size_t i = 0; i < pred.data.size(); ++i) pred.data[i] += low.data[i];
    }
    clamp01(pred);
    return pred;
}

TrainResult train(const std::vector<HsiCube>& dataset, ParamStore& ps, MaFormer& net,
                  const TrainConfig& cfg) {
    cfg.validate();
    require_matching_model(net, cfg, "train");
    check(!dataset.empty(), "train: empty dataset");

    Rng rng(cfg.seed);
    Adam adam(ps, AdamConfig{cfg.lr0, 0.9, 0.999, 1e-8});
    TrainResult res;

    std::optional<PatchSample> hold;
    if (cfg.eval_every > 0) {
        TrainConfig one = cfg;
        one.batch = 1;
        hold = sample_patches(dataset, one, rng)[0];
    }

    auto good = snapshot(ps);
    const double inv_b = 1.0 / cfg.batch;

    for (int step = 1; step <= cfg.steps; ++step) {
        long epoch = epoch_of_step(cfg, step - 1, dataset.size());
        double lr = std::ldexp(cfg.lr0, -static_cast<int>(epoch / cfg.halve_every));
        adam.set_lr(lr);

        auto batch = sample_patches(dataset, cfg, rng);
        ps.zero_grads();
        LossTerms sum;
        bool finite = true;
        for (const PatchSample& s : batch) {
            HsiCube low = cfg.blind ? HsiCube(cfg.patch, cfg.patch, cfg.model.bands)
                                    : reconstruct_lowpass(s.mosaic, cfg.lowpass);
            Tensor y = net.forward(mosaic_to_tensor(s.mosaic));
            HsiCube high = tensor_item_to_cube(y, 0);
            HsiCube ghigh;
            LossTerms t = total_loss(low, high, s.ref, s.mask, cfg.weights, &ghigh);
            if (!is_finite(t.total)) {
                finite = false;
                break;
            }
            sum.total += t.total;
            sum.l1s += t.l1s;
            sum.ffl += t.ffl;
            sum.l1c += t.l1c;
            Tensor gy = cube_to_tensor(ghigh);
            for (double& v : gy.v) v *= inv_b;
            net.backward(gy);
        }
        if (!finite) {
            restore(ps, good);
            res.aborted = true;
            break;
        }

        if (step % cfg.log_every == 0 || step == cfg.steps) {
            TraceRow row;
            row.step = step;
            row.terms = LossTerms{sum.total * inv_b, sum.l1s * inv_b, sum.ffl * inv_b,
                                  sum.l1c * inv_b};
            row.lr = lr;
            res.trace.push_back(row);
        }

        good = snapshot(ps);
        adam.step();
        res.steps_run = step;

        if (hold && step % cfg.eval_every == 0) {
            HsiCube pred = predict(net, hold->mosaic, cfg);
            res.holdout.push_back({step, psnr_value(pred, hold->ref)});
        }
        if (!cfg.out_checkpoint.empty() && cfg.checkpoint_every > 0 &&
            step % cfg.checkpoint_every == 0)
            save_checkpoint(cfg.out_checkpoint, ps, config_to_text(cfg.model));
    }

    if (!cfg.out_checkpoint.empty())
        save_checkpoint(cfg.out_checkpoint, ps, config_to_text(cfg.model));
    if (!cfg.out_trace.empty()) write_text(cfg.out_trace, trace_to_csv(res.trace), "trace");
    return res;
}

EvalTable evaluate(const std::vector<HsiCube>& dataset, MaFormer& net, const TrainConfig& cfg) {
    cfg.validate();
    require_matching_model(net, cfg, "evaluate");
    MsfaPattern pat = rowmajor_pattern(cfg.model.period, cfg.model.bands);

    EvalTable tab;
    EvalRow avg;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const HsiCube& cube = dataset[i];
        check(cube.bands == cfg.model.bands, "evaluate: cube band count does not match the model");
        MosaicImage mos = mosaic(cube, pat);

        EvalRow row;
        row.index = static_cast<int>(i);
        row.fdm = metrics(predict(net, mos, cfg), cube);
        row.bilinear = metrics(bilinear_demosaic(mos), cube);
        row.lowpass = metrics(reconstruct_lowpass(mos, cfg.lowpass), cube);
        add_report(avg.fdm, row.fdm);
        add_report(avg.bilinear, row.bilinear);
        add_report(avg.lowpass, row.lowpass);
        tab.rows.push_back(row);
    }
    if (!tab.rows.empty()) {
        double inv = 1.0 / static_cast<double>(tab.rows.size());
        scale_report(avg.fdm, inv);
        scale_report(avg.bilinear, inv);
        scale_report(avg.lowpass, inv);
    }
    avg.index = -1;
    tab.average = avg;
    return tab;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::string out = "step,total,l1s,ffl,l1c,lr\n";
    char buf[192];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step,
                      r.terms.total, r.terms.l1s, r.terms.ffl, r.terms.l1c, r.lr);
        out += buf;
    }
    return out;
}

}  // namespace fdm
