#pragma once

#include <array>
#include <compare>
#include <string>
#include <vector>

#include "cascademix/model.hpp"

namespace cascademix {

enum class QueryKind { X, Y_star, Y_line, Z_line, Z_star, Path, TrianglePath };

/// Conditional infection pattern, conditioned on the first listed vertex of
/// the pattern being the source:
///
///   X u a              u->a
///   Y_star u a b       u->a, u->b
///   Y_line u b c       u->b, b->c
///   Z_line u a b c     u->a, u->b, b->c
///   Z_star u a b c     u->a, u->b, u->c
///   Path a u b         a->u, u->b
///   TrianglePath a u b a->u, u->b  (same event, used when a->b is an edge)
struct EventQuery {
  QueryKind kind = QueryKind::X;
  std::array<Vertex, 4> v{};

  static EventQuery x(Vertex u, Vertex a);
  static EventQuery y_star(Vertex u, Vertex a, Vertex b);
  static EventQuery y_line(Vertex u, Vertex b, Vertex c);
  static EventQuery z_line(Vertex u, Vertex a, Vertex b, Vertex c);
  static EventQuery z_star(Vertex u, Vertex a, Vertex b, Vertex c);
  static EventQuery path(Vertex a, Vertex u, Vertex b);
  static EventQuery triangle_path(Vertex a, Vertex u, Vertex b);

  int arity() const;
  Vertex source() const { return v[0]; }
  /// Infector/infectee pairs that must all be present.
  std::vector<VertexPair> required_events() const;

  auto operator<=>(const EventQuery&) const = default;
};

std::string to_string(QueryKind kind);
std::string to_string(const EventQuery& q);
/// Parses "Y_star u a b" style strings; throws Error on malformed input.
EventQuery parse_query(const std::string& text);

}  // namespace cascademix
