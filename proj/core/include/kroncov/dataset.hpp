#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

namespace kroncov {

/// T independent p x q observations, stored contiguously as a p x (T*q)
/// matrix (observation t occupies columns [t*q, (t+1)*q)). The stacked
/// layout keeps whitening and covariance accumulation single-GEMM.
/// Immutable after construction in normal use; cheap to move.
class MatrixDataset {
public:
  MatrixDataset(Eigen::Index T, Eigen::Index p, Eigen::Index q);
  static MatrixDataset from_observations(const std::vector<Eigen::MatrixXd>& obs);

  Eigen::Index num_obs() const { return T_; }
  Eigen::Index rows() const { return p_; }
  Eigen::Index cols() const { return q_; }

  using ObsBlock = Eigen::Block<Eigen::MatrixXd, Eigen::Dynamic,
                                Eigen::Dynamic, /*InnerPanel=*/true>;
  using ConstObsBlock = Eigen::Block<const Eigen::MatrixXd, Eigen::Dynamic,
                                     Eigen::Dynamic, /*InnerPanel=*/true>;

  ObsBlock observation(Eigen::Index t) {
    return stacked_.middleCols(t * q_, q_);
  }
  ConstObsBlock observation(Eigen::Index t) const {
    return stacked_.middleCols(t * q_, q_);
  }

  Eigen::MatrixXd& stacked() { return stacked_; }
  const Eigen::MatrixXd& stacked() const { return stacked_; }

  /// Observations transposed: (T, q, p) dataset with Y_t'.
  MatrixDataset transposed() const;

  /// Throws ConfigError if any entry is non-finite.
  void validate_finite() const;

  bool operator==(const MatrixDataset& other) const {
    return T_ == other.T_ && p_ == other.p_ && q_ == other.q_ &&
           stacked_ == other.stacked_;
  }

private:
  Eigen::Index T_, p_, q_;
  Eigen::MatrixXd stacked_;
};

/// Dense symmetric matrix validated on construction (|M - M'| <= tol
/// entrywise, finite entries). Stores the symmetrized part.
class SymmetricMatrix {
public:
  explicit SymmetricMatrix(Eigen::MatrixXd m, double tol = 1e-10);
  static SymmetricMatrix identity(Eigen::Index n);

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& mat() const { return m_; }

private:
  Eigen::MatrixXd m_;
};

/// Scales so that trace / dimension == 1. Throws ConfigError on
/// non-positive trace.
SymmetricMatrix rescale_trace(const SymmetricMatrix& sigma);

// MVDS text format:
//   line 1: "# mvds 1"
//   line 2: "T p q"
//   then T blocks of p lines with q whitespace-separated decimal floats;
//   blank lines permitted between blocks.
MatrixDataset load_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const MatrixDataset& ds);

// Symmetric matrix file: line 1 "n", then n lines of n floats.
SymmetricMatrix load_symmetric(const std::filesystem::path& path);
void write_symmetric(const std::filesystem::path& path, const SymmetricMatrix& m);

}  // namespace kroncov
