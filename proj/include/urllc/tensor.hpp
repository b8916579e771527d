#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace urllc {

/// Shape of the PRB grid: M frequency bins, N slots, K users.
struct GridDims {
    std::size_t freq_bins = 0;
    std::size_t slots = 0;
    std::size_t users = 0;

    std::size_t prbs() const { return freq_bins * slots; }
    std::size_t size() const { return freq_bins * slots * users; }

    friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Dense [M][N][K] tensor, user index fastest. Indices are 0-based in
/// memory; slot index n corresponds to slot number n + 1.
template <typename T>
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(GridDims dims, T fill = T{}) : dims_(dims), data_(dims.size(), fill) {}

    const GridDims& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }

    std::size_t offset(std::size_t m, std::size_t n, std::size_t k) const {
        return (m * dims_.slots + n) * dims_.users + k;
    }

    T& operator()(std::size_t m, std::size_t n, std::size_t k) { return data_[offset(m, n, k)]; }
    const T& operator()(std::size_t m, std::size_t n, std::size_t k) const {
        return data_[offset(m, n, k)];
    }

    T& at(std::size_t m, std::size_t n, std::size_t k) {
        check(m, n, k);
        return data_[offset(m, n, k)];
    }
    const T& at(std::size_t m, std::size_t n, std::size_t k) const {
        check(m, n, k);
        return data_[offset(m, n, k)];
    }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    void check(std::size_t m, std::size_t n, std::size_t k) const {
        if (m >= dims_.freq_bins || n >= dims_.slots || k >= dims_.users)
            throw std::out_of_range("Tensor3 index out of range");
    }

    GridDims dims_{};
    std::vector<T> data_;
};

}  // namespace urllc
