#include "moelab/task.hpp"

#include "moelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace moelab {

Dataset make_dataset(const TaskSpec& spec, uint64_t seed) {
    if (spec.input_dim == 0 || spec.dataset_size == 0)
        throw std::invalid_argument("make_dataset: empty task");
    Dataset ds;
    ds.input_dim = spec.input_dim;
    ds.x.assign(spec.dataset_size, Vector(spec.input_dim));
    ds.y.assign(spec.dataset_size, 0.0);

    rng::SplitMix64 xs(rng::derive(seed, 0x7461736b, 1));
    rng::SplitMix64 ns(rng::derive(seed, 0x7461736b, 2));
    rng::SplitMix64 ts(rng::derive(seed, 0x7461736b, 3));

    Vector teacher(spec.input_dim);
    for (double& t : teacher) t = ts.next_gaussian();

    const double xstd = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    for (std::size_t p = 0; p < spec.dataset_size; ++p) {
        double dot = 0.0;
        for (std::size_t j = 0; j < spec.input_dim; ++j) {
            ds.x[p][j] = xstd * xs.next_gaussian();
            dot += teacher[j] * ds.x[p][j];
        }
        switch (spec.kind) {
            case TaskSpec::Kind::gaussian_teacher:
                ds.y[p] = std::clamp(dot, -spec.label_clip, spec.label_clip) +
                          spec.label_noise_std * ns.next_gaussian();
                break;
            case TaskSpec::Kind::random_labels:
                ds.y[p] = ns.next_gaussian();
                break;
        }
    }
    return ds;
}

void Dataset::batch(std::size_t step, std::size_t batch_size, Matrix& xs, Vector& ys) const {
    xs = Matrix(input_dim, batch_size);
    ys.assign(batch_size, 0.0);
    const std::size_t start = (step * batch_size) % x.size();
    for (std::size_t b = 0; b < batch_size; ++b) {
        const std::size_t p = (start + b) % x.size();
        for (std::size_t j = 0; j < input_dim; ++j) xs(j, b) = x[p][j];
        ys[b] = y[p];
    }
}

TaskSpec::Kind task_kind_from_string(const std::string& s) {
    if (s == "gaussian_teacher") return TaskSpec::Kind::gaussian_teacher;
    if (s == "random_labels") return TaskSpec::Kind::random_labels;
    throw std::invalid_argument("unknown task kind: " + s);
}

const char* task_kind_name(TaskSpec::Kind k) {
    return k == TaskSpec::Kind::gaussian_teacher ? "gaussian_teacher" : "random_labels";
}

} // namespace moelab
