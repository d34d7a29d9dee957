#pragma once

// Piecewise affine (P1) interpolation on a SimplicialMesh.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sldp/mesh.hpp"

namespace sldp {

/// Nodal values of a (possibly vector-valued) function in the P1 space.
/// Values are stored vertex-major: value(v, c) = values[v * width + c].
class NodalField {
 public:
  NodalField(std::shared_ptr<const SimplicialMesh> mesh, std::size_t width,
             std::vector<double> values);

  const SimplicialMesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const SimplicialMesh>& mesh_ptr() const noexcept { return mesh_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return mesh_->vertex_count(); }

  const std::vector<double>& values() const noexcept { return values_; }
  double value(std::size_t vertex, std::size_t component = 0) const {
    return values_[vertex * width_ + component];
  }
  std::span<const double> at(std::size_t vertex) const {
    return {values_.data() + vertex * width_, width_};
  }

  /// I_k at an arbitrary point of the closed box; throws OutOfDomain outside.
  std::vector<double> interpolate(std::span<const double> point) const;
  double interpolate_scalar(std::span<const double> point, std::size_t component = 0) const;
  double interpolate_scalar(const SimplexWeights& w, std::size_t component = 0) const {
    double s = 0.0;
    for (std::size_t j = 0; j < w.count; ++j) s += w.weight[j] * values_[w.vertex[j] * width_ + component];
    return s;
  }

 private:
  std::shared_ptr<const SimplicialMesh> mesh_;
  std::size_t width_;
  std::vector<double> values_;
};

std::vector<double> interpolate(const NodalField& field, std::span<const double> point);

using PointFunction = std::function<void(std::span<const double> point, std::span<double> out)>;

/// Tabulates fn at the mesh vertices. Non-finite output raises NumericalError
/// naming the vertex.
NodalField sample_function(std::shared_ptr<const SimplicialMesh> mesh, std::size_t width,
                           const PointFunction& fn);

/// I_k fn(point) evaluated without tabulating fn on the whole mesh: fn is
/// called only at the vertices of the simplex containing point.
void interpolate_function(const SimplicialMesh& mesh, std::span<const double> point,
                          std::size_t width, const PointFunction& fn, std::span<double> out);

}  // namespace sldp
