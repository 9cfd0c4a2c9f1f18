#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shdiff {

/// Dense row-major matrix of doubles. The only container the numeric code
/// uses; rows are samples, columns are coordinates unless stated otherwise.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return rows * cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void require_shape(std::size_t r, std::size_t c, const char* what) const {
        if (rows != r || cols != c)
            throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }
};

/// What a batch of points represents in the pipeline.
enum class SampleTag { target_draw, noised, generated };

/// A batch of points plus the bookkeeping the samplers and metrics need:
/// where the batch came from and, when noised/generated, at which noise level.
struct SampleBatch {
    Matrix points;  // n x d
    SampleTag tag = SampleTag::target_draw;
    double sigma = 0.0;  // noise level for tag != target_draw

    std::size_t n() const { return points.rows; }
    std::size_t dim() const { return points.cols; }
};

inline const char* to_string(SampleTag t) {
    switch (t) {
        case SampleTag::target_draw: return "target_draw";
        case SampleTag::noised: return "noised";
        case SampleTag::generated: return "generated";
    }
    return "?";
}

}  // namespace shdiff
