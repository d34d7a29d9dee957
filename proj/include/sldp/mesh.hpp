#pragma once

// Uniform Kuhn (Freudenthal) triangulations of axis-aligned boxes.
//
// Every grid cell is split into n! simplices, one per ordering of the
// coordinate axes. The simplex for the permutation p has the vertices
//   v_0 = cell base corner,  v_j = v_{j-1} + dx[p_j] e_{p_j},
// and contains exactly the points of the cell whose fractional coordinates
// satisfy t[p_1] >= t[p_2] >= ... >= t[p_n]. Point location is therefore a
// floor per axis followed by a sort, and barycentric coordinates are the
// successive differences of the sorted fractions.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace sldp {

/// Largest supported state dimension (n! simplices per cell).
inline constexpr std::size_t kMaxDim = 6;

class BoxDomain {
 public:
  BoxDomain(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const noexcept { return lower_.size(); }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

  /// Closed-box membership, no tolerance.
  bool contains(std::span<const double> point) const;

  /// Componentwise projection onto [lower, upper].
  std::vector<double> clamp(std::span<const double> point) const;
  void clamp_in_place(std::span<double> point) const;

  /// Infinity-norm distance from the box (0 inside).
  double distance_outside(std::span<const double> point) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

std::vector<double> clamp_to_domain(const BoxDomain& domain, std::span<const double> point);

/// Barycentric location returned by the public API.
struct BarycentricLocation {
  std::size_t simplex_index = 0;
  std::vector<std::size_t> vertices;  // vertex indices of the simplex, size n+1
  std::vector<double> coords;         // matching weights, size n+1
};

/// Allocation-free variant used on hot paths.
struct SimplexWeights {
  std::size_t simplex_index = 0;
  std::size_t count = 0;  // n+1
  std::array<std::size_t, kMaxDim + 1> vertex{};
  std::array<double, kMaxDim + 1> weight{};
};

class SimplicialMesh {
 public:
  SimplicialMesh(BoxDomain domain, std::vector<std::size_t> cells_per_dim);

  const BoxDomain& domain() const noexcept { return domain_; }
  std::size_t dim() const noexcept { return domain_.dim(); }
  const std::vector<std::size_t>& cells_per_dim() const noexcept { return cells_; }

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t simplex_count() const noexcept { return simplices_.size() / (dim() + 1); }

  std::span<const double> vertex(std::size_t i) const {
    return {vertices_.data() + i * dim(), dim()};
  }
  std::span<const std::size_t> simplex(std::size_t s) const {
    return {simplices_.data() + s * (dim() + 1), dim() + 1};
  }

  /// Maximum simplex diameter.
  double k() const noexcept { return k_; }

  /// Grid spacing along each axis.
  const std::vector<double>& spacing() const noexcept { return spacing_; }

  /// Throws OutOfDomain when the point is outside the closed box.
  BarycentricLocation locate(std::span<const double> point) const;
  void locate_into(std::span<const double> point, SimplexWeights& out) const;

 private:
  std::size_t vertex_index(std::span<const std::size_t> multi_index) const;

  BoxDomain domain_;
  std::vector<std::size_t> cells_;
  std::vector<double> spacing_;
  std::vector<std::size_t> vertex_stride_;
  std::vector<std::size_t> cell_stride_;
  std::size_t vertex_count_ = 0;
  std::vector<double> vertices_;
  std::vector<std::size_t> simplices_;
  // Lexicographic rank of an axis permutation, indexed by its mixed-radix code.
  std::vector<std::size_t> permutation_rank_;
  std::size_t permutations_per_cell_ = 1;
  double k_ = 0.0;
};

SimplicialMesh build_uniform_mesh(const BoxDomain& domain, std::vector<std::size_t> cells_per_dim);

/// Smallest uniform cell count per axis whose Kuhn simplices have diameter <= k.
std::vector<std::size_t> cells_for_diameter(const BoxDomain& domain, double k);

}  // namespace sldp
