#include "sldp/interp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sldp/error.hpp"

namespace sldp {

NodalField::NodalField(std::shared_ptr<const SimplicialMesh> mesh, std::size_t width,
                       std::vector<double> values)
    : mesh_(std::move(mesh)), width_(width), values_(std::move(values)) {
  if (!mesh_) throw InvalidArgument("nodal field requires a mesh");
  if (width_ == 0) throw InvalidArgument("nodal field width must be positive");
  if (values_.size() != mesh_->vertex_count() * width_)
    throw InvalidArgument("nodal field has " + std::to_string(values_.size()) +
                          " values, expected " + std::to_string(mesh_->vertex_count() * width_));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw NumericalError("nodal field value at vertex " + std::to_string(i / width_) +
                           " is not finite");
}

std::vector<double> NodalField::interpolate(std::span<const double> point) const {
  SimplexWeights w;
  mesh_->locate_into(point, w);
  std::vector<double> out(width_, 0.0);
  for (std::size_t j = 0; j < w.count; ++j)
    for (std::size_t c = 0; c < width_; ++c) out[c] += w.weight[j] * values_[w.vertex[j] * width_ + c];
  return out;
}

double NodalField::interpolate_scalar(std::span<const double> point, std::size_t component) const {
  SimplexWeights w;
  mesh_->locate_into(point, w);
  return interpolate_scalar(w, component);
}

std::vector<double> interpolate(const NodalField& field, std::span<const double> point) {
  return field.interpolate(point);
}

NodalField sample_function(std::shared_ptr<const SimplicialMesh> mesh, std::size_t width,
                           const PointFunction& fn) {
  if (!mesh) throw InvalidArgument("sample_function requires a mesh");
  std::vector<double> values(mesh->vertex_count() * width);
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
    std::span<double> out(values.data() + v * width, width);
    fn(mesh->vertex(v), out);
    for (double x : out)
      if (!std::isfinite(x))
        throw NumericalError("function value at vertex " + std::to_string(v) + " is not finite");
  }
  return NodalField(std::move(mesh), width, std::move(values));
}

void interpolate_function(const SimplicialMesh& mesh, std::span<const double> point,
                          std::size_t width, const PointFunction& fn, std::span<double> out) {
  SimplexWeights w;
  mesh.locate_into(point, w);
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> buf(width);
  for (std::size_t j = 0; j < w.count; ++j) {
    if (w.weight[j] == 0.0) continue;
    fn(mesh.vertex(w.vertex[j]), buf);
    for (std::size_t c = 0; c < width; ++c) out[c] += w.weight[j] * buf[c];
  }
}

}  // namespace sldp
