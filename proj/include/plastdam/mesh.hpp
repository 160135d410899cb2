#pragma once

/**
 * @file mesh.hpp
 * @brief Crossed triangulation of the unit square with P1/P0 geometry.
 *
 * Every square cell of an n_sub x n_sub grid is split into four triangles by
 * its center node. Vertices are numbered row-major first, then the cell
 * centers row-major, so the numbering is fully deterministic.
 */

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace plastdam {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct Mesh {
  int n_sub = 0;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> elements;  // counter-clockwise
  std::vector<double> element_area;
  std::vector<std::array<Vec2, 3>> grad_phi;  // constant P1 gradients per element
  std::vector<double> lumped_weight;          // one third of adjacent triangle area

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_elements() const { return elements.size(); }
};

enum class Variant { asymmetric, symmetric };

inline std::string_view to_string(Variant v) {
  return v == Variant::asymmetric ? "asymmetric" : "symmetric";
}

inline Variant variant_from_string(std::string_view s) {
  if (s == "asymmetric") return Variant::asymmetric;
  if (s == "symmetric") return Variant::symmetric;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

/// Node sets on the boundary. Left edge: both components fixed. Right edge:
/// horizontal component prescribed, vertical free.
struct BoundaryTags {
  std::vector<int> dirichlet_xy;
  std::vector<int> dirichlet_x;
  std::vector<int> free;
};

namespace detail {

inline int vertex_index(int n, int i, int j) { return j * (n + 1) + i; }
inline int center_index(int n, int i, int j) { return (n + 1) * (n + 1) + j * n + i; }

inline void compute_element_geometry(Mesh& m) {
  const std::size_t ne = m.elements.size();
  m.element_area.resize(ne);
  m.grad_phi.resize(ne);
  m.lumped_weight.assign(m.nodes.size(), 0.0);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& tri = m.elements[e];
    const Vec2& p0 = m.nodes[tri[0]];
    const Vec2& p1 = m.nodes[tri[1]];
    const Vec2& p2 = m.nodes[tri[2]];
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    m.element_area[e] = 0.5 * det;
    // grad phi_a = rot90(opposite edge) / det
    m.grad_phi[e][0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / det;
    m.grad_phi[e][1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / det;
    m.grad_phi[e][2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / det;
    for (int a = 0; a < 3; ++a) m.lumped_weight[tri[a]] += m.element_area[e] / 3.0;
  }
}

}  // namespace detail

inline Mesh build_crossed_mesh(int n_sub) {
  if (n_sub < 1) throw std::invalid_argument("n_sub must be positive");
  Mesh m;
  m.n_sub = n_sub;
  const int n = n_sub;
  const double h = 1.0 / n;
  m.nodes.reserve(static_cast<std::size_t>((n + 1) * (n + 1) + n * n));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) m.nodes.emplace_back(i * h, j * h);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m.nodes.emplace_back((i + 0.5) * h, (j + 0.5) * h);

  m.elements.reserve(static_cast<std::size_t>(4 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = detail::vertex_index(n, i, j);
      const int v10 = detail::vertex_index(n, i + 1, j);
      const int v11 = detail::vertex_index(n, i + 1, j + 1);
      const int v01 = detail::vertex_index(n, i, j + 1);
      const int c = detail::center_index(n, i, j);
      m.elements.push_back({v00, v10, c});  // bottom
      m.elements.push_back({v10, v11, c});  // right
      m.elements.push_back({v11, v01, c});  // top
      m.elements.push_back({v01, v00, c});  // left
    }
  }
  detail::compute_element_geometry(m);
  return m;
}

/// Tags the left edge as fully clamped and the right edge as horizontally
/// driven. For the asymmetric variant the bottom sixth of the right edge
/// stays free; the node at exactly y = 1/6 is constrained.
inline BoundaryTags tag_boundaries(const Mesh& mesh, Variant variant) {
  const int n = mesh.n_sub;
  if (variant == Variant::asymmetric && n % 6 != 0)
    throw std::invalid_argument("asymmetric variant requires n_sub divisible by 6 (got " +
                                std::to_string(n) + ")");
  BoundaryTags tags;
  const int j_free_below = variant == Variant::asymmetric ? n / 6 : 0;
  for (int j = 0; j <= n; ++j) tags.dirichlet_xy.push_back(detail::vertex_index(n, 0, j));
  for (int j = 0; j <= n; ++j) {
    const int v = detail::vertex_index(n, n, j);
    if (j >= j_free_below)
      tags.dirichlet_x.push_back(v);
    else
      tags.free.push_back(v);
  }
  // Remaining boundary nodes: bottom and top edges without corners.
  for (int i = 1; i < n; ++i) {
    tags.free.push_back(detail::vertex_index(n, i, 0));
    tags.free.push_back(detail::vertex_index(n, i, n));
  }
  return tags;
}

/// Constant small-strain tensor sym(grad u) on every element.
inline std::vector<Mat2> p1_strain(const Mesh& mesh, std::span<const Vec2> u) {
  if (u.size() != mesh.num_nodes())
    throw std::invalid_argument("displacement size " + std::to_string(u.size()) +
                                " does not match node count " + std::to_string(mesh.num_nodes()));
  std::vector<Mat2> strain(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    Mat2 grad = Mat2::Zero();
    for (int a = 0; a < 3; ++a) grad += u[mesh.elements[e][a]] * mesh.grad_phi[e][a].transpose();
    strain[e] = 0.5 * (grad + grad.transpose());
  }
  return strain;
}

/// Permutations induced by the reflection y -> 1 - y.
struct Reflection {
  std::vector<int> node_map;
  std::vector<int> element_map;
};

inline Reflection reflect_y(const Mesh& mesh) {
  const int n = mesh.n_sub;
  Reflection r;
  r.node_map.resize(mesh.num_nodes());
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      r.node_map[detail::vertex_index(n, i, j)] = detail::vertex_index(n, i, n - j);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      r.node_map[detail::center_index(n, i, j)] = detail::center_index(n, i, n - 1 - j);

  std::map<std::array<int, 3>, int> by_nodes;
  auto sorted = [](std::array<int, 3> t) {
    std::sort(t.begin(), t.end());
    return t;
  };
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    by_nodes.emplace(sorted(mesh.elements[e]), static_cast<int>(e));
  r.element_map.resize(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    std::array<int, 3> img{};
    for (int a = 0; a < 3; ++a) img[a] = r.node_map[mesh.elements[e][a]];
    r.element_map[e] = by_nodes.at(sorted(img));
  }
  return r;
}

}  // namespace plastdam
