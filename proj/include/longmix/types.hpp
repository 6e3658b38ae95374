#ifndef LONGMIX_TYPES_HPP
#define LONGMIX_TYPES_HPP

#include <Eigen/Dense>

namespace longmix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Eigen::Index;

}  // namespace longmix

#endif  // LONGMIX_TYPES_HPP
