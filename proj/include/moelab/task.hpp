#pragma once

#include "moelab/linalg.hpp"

#include <cstdint>
#include <string>

namespace moelab {

// Synthetic regression tasks. Inputs have entries N(0, 1/D) so the teacher
// signal stays order one regardless of D; labels are a clipped fixed random
// linear teacher plus Gaussian noise (gaussian_teacher), or pure noise
// (random_labels). Deterministic given the seed.
struct TaskSpec {
    enum class Kind { gaussian_teacher, random_labels };
    Kind kind = Kind::gaussian_teacher;
    std::size_t input_dim = 8;
    std::size_t dataset_size = 6400;
    double label_noise_std = 0.1;
    double label_clip = 3.0;
};

struct Dataset {
    std::size_t input_dim = 0;
    std::vector<Vector> x; // dataset_size inputs
    Vector y;

    // Sequential minibatches with wraparound; the single-pass analogue.
    void batch(std::size_t step, std::size_t batch_size, Matrix& xs, Vector& ys) const;
};

Dataset make_dataset(const TaskSpec& spec, uint64_t seed);

TaskSpec::Kind task_kind_from_string(const std::string& s);
const char* task_kind_name(TaskSpec::Kind k);

} // namespace moelab
