#pragma once

#include <Eigen/Core>

namespace microdata {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec4 = Eigen::Vector4d;

inline bool all_finite(const Vec& v)
{
    return v.allFinite();
}

inline bool in_unit_box(const Vec& v)
{
    return (v.array() >= 0.0).all() && (v.array() <= 1.0).all();
}

inline Vec clamp_unit(Vec v)
{
    return v.cwiseMax(0.0).cwiseMin(1.0);
}

} // namespace microdata
