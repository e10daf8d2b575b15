#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace espine {

// Dense row-major rows x cols matrix.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
            : rows_(rows)
            , cols_(cols)
            , data_(rows * cols, fill)
    {
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    T& at(std::size_t r, std::size_t c)
    {
        if (r >= rows_ || c >= cols_)
            throw std::out_of_range("Grid::at");
        return data_[r * cols_ + c];
    }
    const T& at(std::size_t r, std::size_t c) const
    {
        if (r >= rows_ || c >= cols_)
            throw std::out_of_range("Grid::at");
        return data_[r * cols_ + c];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

} // namespace espine
