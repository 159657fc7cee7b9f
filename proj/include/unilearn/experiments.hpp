#pragma once

#include "unilearn/core_nn.hpp"
#include "unilearn/exponent.hpp"
#include "unilearn/recovery.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace unilearn {

struct AdamParams {
    double lr_init = 1e-3;
    double lr_final = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    /// Throws PreconditionError unless lr_init >= lr_final > 0, betas in [0,1), eps > 0.
    void validate() const;
};

/// Ground truth used by an experiment.
enum class TargetKind {
    /// Networks drawn from the teacher class.
    Teachers,
    /// The fixed spiky function log(sin 50x + 2) + sin 5x (d = 1).
    SpikySine,
};

struct ExperimentConfig {
    std::size_t d = 1;
    /// Sample counts swept; one err_hat column per entry.
    std::vector<std::size_t> m_values{100};
    TargetKind target = TargetKind::Teachers;
    NetworkClass teacher_class{{1, 32, 32, 32, 32, 1}, 0.5, Exponent::infinity()};
    std::size_t n_teachers = 5;
    std::vector<std::vector<std::size_t>> student_archs{{1, 64, 64, 64, 64, 1}};
    std::vector<std::size_t> batch_sizes{10};
    std::size_t n_seeds = 2;
    std::size_t n_eval = 65536;
    std::vector<Exponent> p_list{Exponent::finite(1.0), Exponent::finite(2.0), Exponent::infinity()};
    AdamParams adam;
    std::size_t epochs = 1000;
    /// Inputs live in [-0.5, 0.5]^d when true, in [0, 1]^d otherwise.
    bool centered_domain = true;
    std::uint64_t seed = 0;

    void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

/// Every weight and bias i.i.d. uniform on [-c, c]. Requires q = inf.
Mlp sample_teacher(const NetworkClass& cls, std::uint64_t seed);

/// Weights and biases of layer l uniform on [-sqrt(1/N_{l-1}), sqrt(1/N_{l-1})].
Mlp init_student(const std::vector<std::size_t>& arch, std::uint64_t seed);

struct TrainResult {
    Mlp net;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Adam on the MSE with minibatches drawn from a seeded shuffle each epoch and
/// the learning rate multiplied by (lr_final/lr_init)^{1/epochs} after every
/// epoch. Starts from init_student(arch, seed). Throws TrainingDiverged when
/// the loss becomes non-finite.
TrainResult train_student(const std::vector<std::size_t>& arch, const GradientBatch& samples, std::size_t batch_size,
                          std::size_t epochs, const AdamParams& adam, std::uint64_t seed);

/// Same, continuing from a given network.
TrainResult train_from(Mlp net, const GradientBatch& samples, std::size_t batch_size, std::size_t epochs,
                       const AdamParams& adam, std::uint64_t seed);

double spiky_sine(double x);

/// Errors of one (teacher, seed, variant, m) cell, aligned with p_list.
struct TrialResult {
    std::size_t m = 0;
    std::size_t teacher_id = 0;
    std::size_t seed_index = 0;
    std::size_t variant_index = 0;
    std::vector<std::size_t> student_arch;
    std::size_t batch_size = 0;
    std::vector<double> errors;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    /// Final training loss above the initial one.
    bool flagged = false;
    double train_time = 0.0;
};

struct ErrHatEntry {
    std::size_t m = 0;
    Exponent p = Exponent::infinity();
    double err_hat = 0.0;
};

struct ExperimentResult {
    std::vector<TrialResult> trials;
    std::vector<ErrHatEntry> table;

    /// err_hat for (m, p); throws std::out_of_range if absent.
    double err_hat(std::size_t m, Exponent p) const;
};

/// The min-max estimator: for every m and p, the sup over targets of the inf
/// over variants (student arch x batch size) of the seed-averaged Lp error
/// on one shared set of n_eval uniform points. The L-inf entry is the plain
/// maximum over that set. Trials run under parallel_for; results do not
/// depend on the thread count.
ExperimentResult estimate_err_hat(const ExperimentConfig& config);

std::string trials_csv(const ExperimentConfig& config, const ExperimentResult& result, bool with_timing);
nlohmann::json err_hat_json(const ExperimentConfig& config, const ExperimentResult& result);

/// Training recipe used by student_method.
struct StudentRecipe {
    std::vector<std::size_t> arch{1, 64, 64, 64, 64, 1};
    std::size_t batch_size = 10;
    std::size_t epochs = 500;
    AdamParams adam;
    std::uint64_t seed = 0;
};

StudentRecipe student_recipe_from_json(const nlohmann::json& j);

/// A learning method that queries m seeded uniform points of [0,1]^d and
/// returns a student trained on the answers. Deterministic for a fixed recipe.
DeterministicMethod student_method(std::size_t d, std::size_t m, const StudentRecipe& recipe);

} // namespace unilearn
