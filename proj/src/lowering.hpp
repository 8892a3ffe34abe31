#pragma once

// Standard-form view of a ConicProgram shared by the solver and the verifier:
//
//   minimize c_free' x_f + c_cone' x_c + c0
//   subject to A_free x_f + A_cone x_c = b,  x_c in K
//
// K is a product of PSD cones (stored as svec, off-diagonals scaled by sqrt 2)
// and second-order cones. PSD shifts are folded into b and c0, and the norm
// ball becomes an extra second-order cone tied to its block by equality rows.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "stableid/conic.hpp"

namespace stableid::detail {

inline std::size_t svec_size(std::size_t n) { return n * (n + 1) / 2; }
inline std::size_t svec_index(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return j * (j + 1) / 2 + i;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t n);

struct Cone {
  bool psd = true;
  std::size_t dim = 0;     ///< matrix order (PSD) or vector length (SOC)
  std::size_t offset = 0;  ///< position in the cone vector
  std::size_t size() const { return psd ? svec_size(dim) : dim; }
};

struct LoweredProgram {
  enum class SlotKind { Free, Cone };
  struct Slot {
    SlotKind kind = SlotKind::Free;
    std::size_t index = 0;   ///< cone index for cone slots
    std::size_t offset = 0;  ///< first free column for free slots
  };

  std::size_t n_free = 0;
  std::size_t n_cone = 0;
  std::vector<Cone> cones;
  std::vector<Slot> slots;  ///< one per original block
  std::optional<std::size_t> ball_cone;

  Eigen::MatrixXd A_free;
  Eigen::MatrixXd A_cone;
  Eigen::VectorXd b;
  Eigen::VectorXd c_free;
  Eigen::VectorXd c_cone;
  double c0 = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(b.size()); }
};

LoweredProgram lower(const ConicProgram& cp);

/// Block values to standard-form coordinates (the ball cone is filled from its block).
void pack(const ConicProgram& cp, const LoweredProgram& lp, const std::vector<Eigen::MatrixXd>& values,
          Eigen::VectorXd& x_free, Eigen::VectorXd& x_cone);

std::vector<Eigen::MatrixXd> unpack(const ConicProgram& cp, const LoweredProgram& lp,
                                    const Eigen::VectorXd& x_free, const Eigen::VectorXd& x_cone);

/// Smallest eigenvalue (PSD) or x_0 - |x_1..| (SOC) of one cone segment.
double cone_margin(const Cone& cone, const Eigen::Ref<const Eigen::VectorXd>& segment);

}  // namespace stableid::detail
