#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "confound/errors.hpp"
#include "confound/linalg.hpp"
#include "confound/rng.hpp"

namespace confound {

// Covariance matrix of a mean-zero multivariate Gaussian.
struct CovarianceSpec {
    std::size_t dim = 0;
    Matrix matrix;

    void validate() const {
        if (dim == 0 || matrix.rows() != dim || matrix.cols() != dim)
            throw Error("CovarianceSpec: matrix must be dim x dim");
        for (std::size_t i = 0; i < dim; ++i) {
            if (matrix(i, i) <= 0.0)
                throw Error("CovarianceSpec: diagonal entry " + std::to_string(i) + " not positive");
            for (std::size_t j = 0; j < i; ++j)
                if (std::fabs(matrix(i, j) - matrix(j, i)) > 1e-12)
                    throw Error("CovarianceSpec: matrix not symmetric at (" + std::to_string(i) +
                                "," + std::to_string(j) + ")");
        }
    }

    static CovarianceSpec from_matrix(Matrix m) {
        CovarianceSpec s;
        s.dim = m.rows();
        s.matrix = std::move(m);
        s.validate();
        return s;
    }
};

inline Matrix cholesky_lower(const CovarianceSpec& spec) {
    spec.validate();
    return cholesky_lower(spec.matrix);
}

// n i.i.d. rows ~ N(0, spec.matrix), as x = L z with z standard normal.
// Pure function of (seed, spec, n); the substream separates MVN draws
// from any other consumption of the same logical stream.
inline Matrix sample_mvn(const SeedSpec& seed, const CovarianceSpec& spec, std::size_t n,
                         std::uint64_t substream = 0) {
    if (n < 1) throw Error("sample_mvn: n must be >= 1");
    Matrix l = cholesky_lower(spec);
    const std::size_t p = spec.dim;
    Rng rng(seed, substream);
    Matrix out(n, p);
    std::vector<double> z(p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) z[j] = rng.normal();
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k <= j; ++k) s += l(j, k) * z[k];
            out(i, j) = s;
        }
    }
    return out;
}

} // namespace confound
