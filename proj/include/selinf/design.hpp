#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "selinf/errors.hpp"

namespace selinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense n x p design. Columns may optionally be certified unit-norm.
class DesignMatrix {
public:
    explicit DesignMatrix(Matrix values, bool normalized = false)
        : values_(std::move(values)), normalized_(normalized) {
        if (values_.rows() < 1 || values_.cols() < 1)
            throw input_error("DesignMatrix: need n >= 1 and p >= 1");
        if (!values_.allFinite())
            throw input_error("DesignMatrix: non-finite entry");
        column_norms_ = values_.colwise().norm();
        if (normalized_) {
            for (Eigen::Index j = 0; j < values_.cols(); ++j) {
                if (std::abs(column_norms_[j] - 1.0) > 1e-12)
                    throw input_error("DesignMatrix: column " + std::to_string(j + 1) +
                                      " not unit-norm under `normalized` flag");
            }
        }
    }

    const Matrix& values() const { return values_; }
    const Vector& column_norms() const { return column_norms_; }
    bool normalized() const { return normalized_; }

    Eigen::Index n() const { return values_.rows(); }
    Eigen::Index p() const { return values_.cols(); }

private:
    Matrix values_;
    Vector column_norms_;
    bool normalized_;
};

} // namespace selinf
