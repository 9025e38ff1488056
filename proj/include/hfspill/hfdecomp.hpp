#pragma once

// Decomposition of FOMC-window surprises into a pure monetary policy (MP)
// shock and an information disclosure (ID) shock.
//
// The surprise matrix M = [i_total, s] (interest-rate composite, equity
// index) is written as M = U C with U'U diagonal and
//
//     C = | 1  c_mp |      c_mp < 0 < c_id
//         | 1  c_id |
//
// U and C are built from a positive-diagonal QR factorization M = Q R, a
// rotation P(alpha) and a rescaling D(alpha):
//
//     U = Q P D,   C = D^-1 P' R,   D = diag(r11 cos(alpha), r11 sin(alpha)).
//
// The sign pattern on C holds only for alpha inside an open interval that
// depends on R; any angle in it gives a valid decomposition.

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hfspill/dates.hpp"

namespace hfspill::hfdecomp {

/// Raw announcement-level surprises.
struct SurprisePanel {
    std::vector<Date> dates;    // strictly increasing
    Eigen::MatrixXd contracts;  // T x K interest-rate instruments, percentage points
    Eigen::VectorXd equity;     // T, percent change of the equity index

    Eigen::Index size() const { return contracts.rows(); }
    void validate() const;
};

/// Composite interest-rate surprise and equity surprise, one entry per announcement.
struct SurprisePair {
    Eigen::VectorXd i_total;
    Eigen::VectorXd s;

    Eigen::Index size() const { return i_total.size(); }
    void validate() const;
};

/// Q, R, P, D factors kept for audit.
struct Factors {
    Eigen::MatrixXd q;  // T x 2, orthonormal columns
    Eigen::Matrix2d r;  // upper triangular, positive diagonal
    Eigen::Matrix2d p;  // rotation
    Eigen::Matrix2d d;  // diagonal rescaling
};

struct ShockDecomposition {
    Eigen::VectorXd i_mp;
    Eigen::VectorXd i_id;
    double alpha = 0.0;  // radians
    double w = 0.5;      // interpolation weight inside the admissible interval
    double c_mp = 0.0;
    double c_id = 0.0;
    Factors factors;

    /// C = [[1, c_mp], [1, c_id]].
    Eigen::Matrix2d loadings() const;
    /// U = [i_mp, i_id].
    Eigen::MatrixXd shocks() const;
};

/// Per-announcement classification by the sign of i_total * s.
struct PoorMansShocks {
    Eigen::VectorXd i_mp;
    Eigen::VectorXd i_id;
};

struct AngleInterval {
    double lo = 0.0;
    double hi = 0.0;

    double at(double w) const { return (1.0 - w) * lo + w * hi; }
    bool contains(double alpha) const { return alpha > lo && alpha < hi; }
};

/// First principal component of the demeaned contract matrix, signed to
/// correlate non-negatively with the first contract and rescaled to its
/// sample standard deviation.
Eigen::VectorXd pca_composite(const SurprisePanel& panel);

/// (pca_composite(panel), panel.equity).
SurprisePair make_pair(const SurprisePanel& panel);

/// Thin QR of [i_total, s] with r11 > 0 and r22 > 0. Throws
/// CollinearSurprisesError when |r22| < 1e-12 |r11|.
std::pair<Eigen::MatrixXd, Eigen::Matrix2d> normalized_qr(const SurprisePair& pair);

/// Loadings (c_mp, c_id) implied by angle alpha for upper-triangular R.
std::pair<double, double> loadings_at(const Eigen::Matrix2d& r, double alpha);

/// Open interval of rotation angles satisfying c_mp < 0 < c_id.
AngleInterval admissible_angle_interval(const SurprisePair& pair);

/// Decomposition at alpha = (1-w) lo + w hi, w in (0,1).
ShockDecomposition decompose_at(const SurprisePair& pair, double w);

/// Decomposition at an explicit angle, which must lie in the admissible interval.
ShockDecomposition decompose_at_angle(const SurprisePair& pair, double alpha);

PoorMansShocks poor_mans_decompose(const SurprisePair& pair);

/// arccos(sqrt(ratio)) for ratio in (0, 1].
double angle_from_variance_ratio(double ratio);

/// Uncentered var(i_mp) / var(i_total) of the poor man's classification.
double poor_mans_variance_ratio(const SurprisePair& pair);

/// Decompositions at w = k/(n+1), k = 1..n.
std::vector<ShockDecomposition> rotation_grid(const SurprisePair& pair, int n = 99);

}  // namespace hfspill::hfdecomp
