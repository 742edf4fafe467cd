#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdm/loss.hpp"
#include "fdm/lowpass.hpp"
#include "fdm/maformer.hpp"
#include "fdm/metrics.hpp"
#include "fdm/msfa.hpp"
#include "fdm/rng.hpp"

namespace fdm {

struct TrainConfig {
    std::uint64_t seed = 0;
    int patch = 128;
    int batch = 2;
    int steps = 100;
    double lr0 = 1e-4;
    int halve_every = 1000;  // epochs between rate halvings
    LossWeights weights;
    LowpassConfig lowpass;
    ModelConfig model;
    bool blind = false;  // learn mosaic -> cube directly, no low-pass stage
    int log_every = 1;
    int eval_every = 0;  // held-out PSNR cadence, 0 disables
    int checkpoint_every = 0;
    std::string out_checkpoint;  // empty: keep results in memory only
    std::string out_trace;

    void validate() const;
};

struct PatchSample {
    MosaicImage mosaic;
    HsiCube ref;
    SampleMask mask;
    int cube_index = 0;
    int row0 = 0;
    int col0 = 0;
};

// Uniformly random crops snapped to the mosaic period so every patch carries
// the same filter phase.
std::vector<PatchSample> sample_patches(const std::vector<HsiCube>& cubes,
                                        const TrainConfig& cfg, Rng& rng);

struct TraceRow {
    int step = 0;  // 1-based
    LossTerms terms;
    double lr = 0.0;
};

struct HoldoutRow {
    int step = 0;
    double psnr = 0.0;
};

struct TrainResult {
    std::vector<TraceRow> trace;
    std::vector<HoldoutRow> holdout;
    int steps_run = 0;
    bool aborted = false;  // non-finite loss; params rolled back to the last good state
};

// Epoch index after `completed_steps` steps; one epoch is one pass over the
// dataset, counted in sampled patches.
long epoch_of_step(const TrainConfig& cfg, long completed_steps, std::size_t dataset_size);

TrainResult train(const std::vector<HsiCube>& dataset, ParamStore& ps, MaFormer& net,
                  const TrainConfig& cfg);

struct EvalRow {
    int index = 0;
    MetricReport fdm;
    MetricReport bilinear;
    MetricReport lowpass;
};

struct EvalTable {
    std::vector<EvalRow> rows;
    EvalRow average;  // index -1
};

EvalTable evaluate(const std::vector<HsiCube>& dataset, MaFormer& net, const TrainConfig& cfg);

// Full reconstruction for one mosaic under the training configuration,
// clamped to the unit range.
HsiCube predict(MaFormer& net, const MosaicImage& mos, const TrainConfig& cfg);

std::string trace_to_csv(const std::vector<TraceRow>& trace);

}  // namespace fdm
