// Desk-scale stand-ins for the three implicit-network families:
//   GlobalMlp    - decoder over p plus a learned global shape code,
//   GridInterp   - decoder over p plus a trilinearly interpolated feature grid,
//   AutoDecoder  - encoder-less decoder with per-shape latent codes that are
//                  optimized jointly with the weights (and alone at
//                  generation time).
// Gradients are exact and hand-derived; training is deterministic per seed.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsamp/sampling.hpp"
#include "qsamp/scalar_grid.hpp"

namespace qsamp {

enum class Archetype { GlobalMlp, GridInterp, AutoDecoder };
enum class Activation { Relu, Tanh };

std::string to_string(Archetype a);
Archetype archetype_from_string(const std::string& name);

struct ArchConfig {
    Archetype archetype = Archetype::GlobalMlp;
    int feature_dim = 16;           // global code / grid feature / latent width
    std::vector<int> hidden = {64, 64, 64};
    int grid_res = 16;              // GridInterp G
    int n_shapes = 1;               // code/latent table rows
    Activation activation = Activation::Relu;
    double init_scale = 1.0;        // multiplier on the 1/sqrt(fan_in) weight std
    double feature_init_sigma = 0.01;  // latent/code/grid init std

    static ArchConfig global_mlp(int n_shapes = 1);
    static ArchConfig grid_interp();
    static ArchConfig auto_decoder(int n_shapes);

    int input_dim() const { return 3 + feature_dim; }
    int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
    long feature_rows() const {
        if (archetype == Archetype::GridInterp)
            return static_cast<long>(grid_res) * grid_res * grid_res;
        return n_shapes;
    }
    long param_count() const;
    void check() const;
};

struct ToyModel {
    ArchConfig arch;
    FieldSpec field;
    uint64_t init_seed = 0;
    std::vector<double> params;
    std::string command;      // producing command echo
    std::string train_info;   // JSON string with training provenance

    // segment views
    std::span<const double> layer_weights(int layer) const;
    std::span<const double> layer_biases(int layer) const;
    std::span<const double> feature_row(long row) const;
    std::span<double> feature_row_mut(long row);
    long feature_offset() const;
};

ToyModel init_model(const ArchConfig& arch, const FieldSpec& field, uint64_t seed);

// Scratch buffers reused across forward/backward calls.
struct NetWorkspace {
    std::vector<double> input;
    std::vector<std::vector<double>> activations;
    std::vector<double> delta, delta_next;
    long corner[8];
    double corner_w[8];
    Vec3 clamped;
    bool clamped_flag = false;
};

// Pre-head network output. shape_id selects the code/latent row (ignored by
// GridInterp); external_z, when non-null, overrides the latent row
// (generation-time decoding with a fitted code).
double forward_raw(const ToyModel& model, const Vec3& p, int shape_id, NetWorkspace& ws,
                   const double* external_z = nullptr);

// Head: Occ -> sigmoid, SDF/TSDF -> identity, UDF -> |.|
double apply_head(const ToyModel& model, double raw);
double predict(const ToyModel& model, const Vec3& p, int shape_id = 0,
               const double* external_z = nullptr);

// Gradient of the pre-head output w.r.t. p (analytic; used by UDF extraction).
Vec3 input_gradient(const ToyModel& model, const Vec3& p, int shape_id, NetWorkspace& ws,
                    const double* external_z = nullptr);

// Loss on pre-head outputs. Occ: binary cross-entropy (targets in {0,1});
// SDF/UDF: mean L1; TSDF: mean L1 with both sides pre-clamped to
// [-tau_t, tau_t]. Returns the mean loss; d(loss)/d(raw_i) goes to draw.
double loss_value(const FieldSpec& field, std::span<const double> raw,
                  std::span<const double> target);
double loss_and_grad(const FieldSpec& field, std::span<const double> raw,
                     std::span<const double> target, std::span<double> draw);

struct TrainConfig {
    long epochs = 300;
    long batch_size = 512;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    uint64_t seed = 0;
    double latent_reg = 1e-4;      // AutoDecoder: L2 weight on latent rows
    long latent_iterations = 400;  // fit_latent epochs
};

struct TrainResult {
    std::vector<double> loss_trace;  // mean batch loss per epoch
};

// Trains on one dataset per shape row (datasets.size() == n_shapes;
// GridInterp takes exactly one). Masked points are dropped before batching.
// AutoDecoder updates decoder weights and latent rows jointly with L2 latent
// regularization. Throws DataError if the loss diverges to NaN/inf.
TrainResult train(ToyModel& model, std::span<const LabeledDataset> datasets,
                  const TrainConfig& config);
TrainResult train(ToyModel& model, const LabeledDataset& dataset, const TrainConfig& config);

// Generation-time latent fitting: decoder fixed, a fresh latent (seeded from
// config.seed) optimized on the dataset for latent_iterations epochs.
std::vector<double> fit_latent(const ToyModel& model, const LabeledDataset& dataset,
                               const TrainConfig& config);

// Exact analytic gradient of the batch loss w.r.t. every parameter
// (finite-difference oracle hook; also used internally by train).
std::vector<double> batch_gradient(const ToyModel& model, const LabeledDataset& dataset,
                                   std::span<const long> sample_indices, int shape_id,
                                   double latent_reg = 0.0);
double batch_loss(const ToyModel& model, const LabeledDataset& dataset,
                  std::span<const long> sample_indices, int shape_id, double latent_reg = 0.0);

// Model outputs (post-head) on the full R^3 lattice.
ScalarGrid grid_eval(const ToyModel& model, int shape_id, int resolution,
                     const double* external_z = nullptr);

// Checkpoint files: JSON manifest at `path`, parameter blob at `path + ".bin"`.
void save_model(const ToyModel& model, const std::string& path);
ToyModel load_model(const std::string& path);
uint32_t model_checksum(const ToyModel& model);

}  // namespace qsamp
