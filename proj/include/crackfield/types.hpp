#ifndef CRACKFIELD_TYPES_HPP
#define CRACKFIELD_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace crackfield {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Compressed sparse row storage throughout; rows sorted and compressed.
using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

} // namespace crackfield

#endif
