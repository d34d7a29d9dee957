#include "sldp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sldp/error.hpp"

namespace sldp {

BoxDomain::BoxDomain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty()) throw InvalidArgument("domain dimension must be at least 1");
  if (lower_.size() != upper_.size())
    throw InvalidArgument("domain lower and upper bounds differ in length");
  if (lower_.size() > kMaxDim)
    throw InvalidArgument("domain dimension exceeds the supported maximum of " +
                          std::to_string(kMaxDim));
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i]))
      throw InvalidArgument("domain bounds must be finite with lower < upper (axis " +
                            std::to_string(i) + ")");
  }
}

bool BoxDomain::contains(std::span<const double> point) const {
  if (point.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(point[i] >= lower_[i] && point[i] <= upper_[i])) return false;
  return true;
}

std::vector<double> BoxDomain::clamp(std::span<const double> point) const {
  std::vector<double> out(point.begin(), point.end());
  clamp_in_place(out);
  return out;
}

void BoxDomain::clamp_in_place(std::span<double> point) const {
  if (point.size() != dim()) throw InvalidArgument("point dimension does not match domain");
  for (std::size_t i = 0; i < dim(); ++i) point[i] = std::clamp(point[i], lower_[i], upper_[i]);
}

double BoxDomain::distance_outside(std::span<const double> point) const {
  double d = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    d = std::max(d, lower_[i] - point[i]);
    d = std::max(d, point[i] - upper_[i]);
  }
  return d;
}

std::vector<double> clamp_to_domain(const BoxDomain& domain, std::span<const double> point) {
  return domain.clamp(point);
}

namespace {

std::size_t permutation_code(std::span<const std::size_t> perm, std::size_t n) {
  std::size_t code = 0;
  for (std::size_t j = perm.size(); j-- > 0;) code = code * n + perm[j];
  return code;
}

}  // namespace

SimplicialMesh::SimplicialMesh(BoxDomain domain, std::vector<std::size_t> cells_per_dim)
    : domain_(std::move(domain)), cells_(std::move(cells_per_dim)) {
  const std::size_t n = dim();
  if (cells_.size() != n)
    throw InvalidArgument("cells_per_dim has " + std::to_string(cells_.size()) +
                          " entries, domain dimension is " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i)
    if (cells_[i] < 1)
      throw InvalidArgument("cells_per_dim[" + std::to_string(i) + "] must be >= 1");

  spacing_.resize(n);
  vertex_stride_.resize(n);
  cell_stride_.resize(n);
  std::size_t vstride = 1, cstride = 1;
  for (std::size_t i = 0; i < n; ++i) {
    spacing_[i] = (domain_.upper()[i] - domain_.lower()[i]) / static_cast<double>(cells_[i]);
    vertex_stride_[i] = vstride;
    cell_stride_[i] = cstride;
    vstride *= cells_[i] + 1;
    cstride *= cells_[i];
  }
  vertex_count_ = vstride;
  const std::size_t cell_count = cstride;

  // Vertices, axis 0 fastest. Coordinates interpolate the bounds so that the
  // last vertex on each axis equals the upper bound exactly.
  vertices_.resize(vertex_count_ * n);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t v = 0; v < vertex_count_; ++v) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(idx[i]) / static_cast<double>(cells_[i]);
      vertices_[v * n + i] =
          idx[i] == cells_[i] ? domain_.upper()[i]
                              : domain_.lower()[i] + t * (domain_.upper()[i] - domain_.lower()[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (++idx[i] <= cells_[i]) break;
      idx[i] = 0;
    }
  }

  // Axis permutations in lexicographic order.
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  permutations_per_cell_ = perms.size();
  std::size_t code_space = 1;
  for (std::size_t i = 0; i < n; ++i) code_space *= n;
  permutation_rank_.assign(code_space, 0);
  for (std::size_t r = 0; r < perms.size(); ++r)
    permutation_rank_[permutation_code(perms[r], n)] = r;

  simplices_.resize(cell_count * perms.size() * (n + 1));
  std::vector<std::size_t> cell(n, 0), corner(n);
  std::size_t s = 0;
  for (std::size_t c = 0; c < cell_count; ++c) {
    for (const auto& p : perms) {
      corner = cell;
      simplices_[s * (n + 1)] = vertex_index(corner);
      for (std::size_t j = 0; j < n; ++j) {
        ++corner[p[j]];
        simplices_[s * (n + 1) + j + 1] = vertex_index(corner);
      }
      ++s;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (++cell[i] < cells_[i]) break;
      cell[i] = 0;
    }
  }

  // All cells are translates of each other, so the first cell's simplices
  // realize the maximum diameter.
  double k2 = 0.0;
  for (std::size_t s0 = 0; s0 < perms.size(); ++s0) {
    auto verts = simplex(s0);
    for (std::size_t a = 0; a < verts.size(); ++a)
      for (std::size_t b = a + 1; b < verts.size(); ++b) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = vertex(verts[a])[i] - vertex(verts[b])[i];
          d2 += d * d;
        }
        k2 = std::max(k2, d2);
      }
  }
  k_ = std::sqrt(k2);
}

std::size_t SimplicialMesh::vertex_index(std::span<const std::size_t> multi_index) const {
  std::size_t v = 0;
  for (std::size_t i = 0; i < multi_index.size(); ++i) v += multi_index[i] * vertex_stride_[i];
  return v;
}

void SimplicialMesh::locate_into(std::span<const double> point, SimplexWeights& out) const {
  const std::size_t n = dim();
  if (point.size() != n) throw InvalidArgument("point dimension does not match mesh");
  if (!domain_.contains(point)) {
    std::string msg = "point (";
    for (std::size_t i = 0; i < n; ++i) msg += (i ? ", " : "") + std::to_string(point[i]);
    throw OutOfDomain(msg + ") lies outside the closed domain");
  }

  std::array<std::size_t, kMaxDim> cell{};
  std::array<double, kMaxDim> frac{};
  std::array<std::size_t, kMaxDim> order{};
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = domain_.lower()[i], hi = domain_.upper()[i];
    double t = (point[i] - lo) / (hi - lo) * static_cast<double>(cells_[i]);
    // Snap roundoff so that vertices are located exactly.
    const double r = std::round(t);
    if (std::abs(t - r) <= 1e-13 * std::max(1.0, r)) t = r;
    std::size_t c = static_cast<std::size_t>(std::floor(t));
    if (c >= cells_[i]) c = cells_[i] - 1;
    cell[i] = c;
    frac[i] = std::clamp(t - static_cast<double>(c), 0.0, 1.0);
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });

  std::size_t cell_linear = 0, base = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cell_linear += cell[i] * cell_stride_[i];
    base += cell[i] * vertex_stride_[i];
  }
  const std::size_t rank =
      permutation_rank_[permutation_code({order.data(), n}, n)];
  out.simplex_index = cell_linear * permutations_per_cell_ + rank;
  out.count = n + 1;
  out.vertex[0] = base;
  out.weight[0] = 1.0 - frac[order[0]];
  for (std::size_t j = 0; j < n; ++j) {
    out.vertex[j + 1] = out.vertex[j] + vertex_stride_[order[j]];
    out.weight[j + 1] = j + 1 < n ? frac[order[j]] - frac[order[j + 1]] : frac[order[j]];
  }
}

BarycentricLocation SimplicialMesh::locate(std::span<const double> point) const {
  SimplexWeights w;
  locate_into(point, w);
  BarycentricLocation loc;
  loc.simplex_index = w.simplex_index;
  loc.vertices.assign(w.vertex.begin(), w.vertex.begin() + static_cast<std::ptrdiff_t>(w.count));
  loc.coords.assign(w.weight.begin(), w.weight.begin() + static_cast<std::ptrdiff_t>(w.count));
  return loc;
}

SimplicialMesh build_uniform_mesh(const BoxDomain& domain, std::vector<std::size_t> cells_per_dim) {
  return SimplicialMesh(domain, std::move(cells_per_dim));
}

std::vector<std::size_t> cells_for_diameter(const BoxDomain& domain, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("mesh size k must be positive");
  const double root_n = std::sqrt(static_cast<double>(domain.dim()));
  std::vector<std::size_t> cells(domain.dim());
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    const double len = domain.upper()[i] - domain.lower()[i];
    const double c = std::ceil(len * root_n / k - 1e-9);
    cells[i] = static_cast<std::size_t>(std::max(1.0, c));
  }
  return cells;
}

}  // namespace sldp
