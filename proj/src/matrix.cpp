#include "glimmer/matrix.hpp"

#include <utility>

#include "glimmer/error.hpp"

namespace glimmer {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

}  // namespace glimmer
