#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mfas {

// Rectangular meta-atom array: n1 x n2 elements spanning an aperture of
// w1 x w2 wavelengths. All lengths in this library are expressed in
// wavelengths; absolute dimensions only matter in the EM module.
struct GridSpec {
    int n1 = 15;      // elements along dimension 1
    int n2 = 8;       // elements along dimension 2
    double w1 = 7.0;  // aperture span along dimension 1 (wavelengths)
    double w2 = 4.0;  // aperture span along dimension 2 (wavelengths)

    int size() const { return n1 * n2; }

    void validate() const {
        if (n1 < 1 || n2 < 1)
            throw std::invalid_argument("GridSpec: element counts must be positive");
        if (w1 < 0.0 || w2 < 0.0)
            throw std::invalid_argument("GridSpec: aperture spans must be nonnegative");
        // Element spacing is w/(n-1), so a single-element dimension cannot
        // carry a nonzero span.
        if (n1 == 1 && w1 > 0.0)
            throw std::invalid_argument("GridSpec: n1 = 1 requires w1 = 0");
        if (n2 == 1 && w2 > 0.0)
            throw std::invalid_argument("GridSpec: n2 = 1 requires w2 = 0");
    }
};

// 1-based element index pair (position along dimension 1, then dimension 2).
struct ElementIndex {
    int i1 = 1;
    int i2 = 1;
    bool operator==(const ElementIndex&) const = default;
};

inline void check_bounds(const ElementIndex& e, const GridSpec& grid) {
    if (e.i1 < 1 || e.i1 > grid.n1 || e.i2 < 1 || e.i2 > grid.n2)
        throw std::out_of_range("element index (" + std::to_string(e.i1) + "," +
                                std::to_string(e.i2) + ") outside " +
                                std::to_string(grid.n1) + "x" + std::to_string(grid.n2) +
                                " grid");
}

// Flattened 1-based element number, counting along dimension 1 first.
inline int map_index(int i1, int i2, const GridSpec& grid) {
    check_bounds({i1, i2}, grid);
    return (i2 - 1) * grid.n1 + i1;
}

inline ElementIndex invert_index(int m, const GridSpec& grid) {
    if (m < 1 || m > grid.size())
        throw std::out_of_range("flat index " + std::to_string(m) + " outside grid");
    return {(m - 1) % grid.n1 + 1, (m - 1) / grid.n1 + 1};
}

// Euclidean distance between two elements, in wavelengths. Elements are
// uniformly spaced, with the outermost elements on the aperture boundary.
inline double element_distance(const GridSpec& grid, const ElementIndex& a,
                               const ElementIndex& b) {
    grid.validate();
    check_bounds(a, grid);
    check_bounds(b, grid);
    const double d1 = grid.n1 > 1 ? std::abs(a.i1 - b.i1) * grid.w1 / (grid.n1 - 1) : 0.0;
    const double d2 = grid.n2 > 1 ? std::abs(a.i2 - b.i2) * grid.w2 / (grid.n2 - 1) : 0.0;
    return std::hypot(d1, d2);
}

}  // namespace mfas
