#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <vector>

namespace opkern {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Vector in the finite-dimensional Hilbert space H = R^d.
using HVec = Vector;
/// Linear map between finite-dimensional Hilbert spaces, stored densely.
using OpMatrix = Matrix;

/// A point of the index set S, given as finite coordinates in R^m.
class Site {
public:
    Site() = default;
    explicit Site(Vector coords);
    Site(std::initializer_list<double> coords);
    static Site scalar(double x);

    Index dim() const noexcept { return coords_.size(); }
    const Vector& coords() const noexcept { return coords_; }
    double operator[](Index i) const { return coords_[i]; }

    friend bool operator==(const Site& a, const Site& b) {
        return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
    }

private:
    Vector coords_;
};

/// Lexicographic comparison of coordinates: negative, zero or positive.
int compare(const Site& a, const Site& b);

std::vector<Site> scalar_sites(std::initializer_list<double> xs);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// n equispaced sites on [lo, hi], endpoints included. Point i is lo + (hi - lo) * (i / (n - 1)),
/// so grids whose (n - 1) values divide each other share their common points bit for bit.
std::vector<Site> equispaced_grid(Interval domain, Index n);

/// Largest absolute entry, 0 for empty matrices.
inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace opkern
