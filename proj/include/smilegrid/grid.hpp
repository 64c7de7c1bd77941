#pragma once

#include <cstddef>
#include <vector>

namespace smilegrid {

// Dense row-major matrix, rows indexed by alpha, columns by rho.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Calibration grid axes: alpha values (rows) and rho values (columns).
struct GridAxes {
    std::vector<double> alphas;
    std::vector<double> rhos;

    std::size_t rows() const { return alphas.size(); }
    std::size_t cols() const { return rhos.size(); }

    // Throws validation_error unless both axes are strictly increasing,
    // rhos lie in (-1, 1) and alphas are positive.
    void validate() const;
};

std::vector<double> linspace(double lo, double hi, std::size_t n);

} // namespace smilegrid
