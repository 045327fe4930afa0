#include "cascademix/query.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <fmt/core.h>

namespace cascademix {

namespace {

void require_distinct(const EventQuery& q) {
  std::set<Vertex> seen(q.v.begin(), q.v.begin() + q.arity());
  if (static_cast<int>(seen.size()) != q.arity())
    throw Error(fmt::format("query '{}' needs distinct vertices", to_string(q)));
}

EventQuery make(QueryKind kind, std::array<Vertex, 4> v) {
  EventQuery q{kind, v};
  require_distinct(q);
  return q;
}

}  // namespace

EventQuery EventQuery::x(Vertex u, Vertex a) { return make(QueryKind::X, {u, a, 0, 0}); }

EventQuery EventQuery::y_star(Vertex u, Vertex a, Vertex b) {
  if (b < a) std::swap(a, b);
  return make(QueryKind::Y_star, {u, a, b, 0});
}

EventQuery EventQuery::y_line(Vertex u, Vertex b, Vertex c) {
  return make(QueryKind::Y_line, {u, b, c, 0});
}

EventQuery EventQuery::z_line(Vertex u, Vertex a, Vertex b, Vertex c) {
  return make(QueryKind::Z_line, {u, a, b, c});
}

EventQuery EventQuery::z_star(Vertex u, Vertex a, Vertex b, Vertex c) {
  std::array<Vertex, 3> legs{a, b, c};
  std::sort(legs.begin(), legs.end());
  return make(QueryKind::Z_star, {u, legs[0], legs[1], legs[2]});
}

EventQuery EventQuery::path(Vertex a, Vertex u, Vertex b) {
  return make(QueryKind::Path, {a, u, b, 0});
}

EventQuery EventQuery::triangle_path(Vertex a, Vertex u, Vertex b) {
  return make(QueryKind::TrianglePath, {a, u, b, 0});
}

int EventQuery::arity() const {
  switch (kind) {
    case QueryKind::X: return 2;
    case QueryKind::Y_star:
    case QueryKind::Y_line:
    case QueryKind::Path:
    case QueryKind::TrianglePath: return 3;
    case QueryKind::Z_line:
    case QueryKind::Z_star: return 4;
  }
  return 0;
}

std::vector<VertexPair> EventQuery::required_events() const {
  switch (kind) {
    case QueryKind::X: return {{v[0], v[1]}};
    case QueryKind::Y_star: return {{v[0], v[1]}, {v[0], v[2]}};
    case QueryKind::Y_line: return {{v[0], v[1]}, {v[1], v[2]}};
    case QueryKind::Z_line: return {{v[0], v[1]}, {v[0], v[2]}, {v[2], v[3]}};
    case QueryKind::Z_star: return {{v[0], v[1]}, {v[0], v[2]}, {v[0], v[3]}};
    case QueryKind::Path:
    case QueryKind::TrianglePath: return {{v[0], v[1]}, {v[1], v[2]}};
  }
  return {};
}

std::string to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::X: return "X";
    case QueryKind::Y_star: return "Y_star";
    case QueryKind::Y_line: return "Y_line";
    case QueryKind::Z_line: return "Z_line";
    case QueryKind::Z_star: return "Z_star";
    case QueryKind::Path: return "Path";
    case QueryKind::TrianglePath: return "TrianglePath";
  }
  return "?";
}

std::string to_string(const EventQuery& q) {
  std::string out = to_string(q.kind);
  for (int i = 0; i < q.arity(); ++i) out += fmt::format(" {}", q.v[i]);
  return out;
}

EventQuery parse_query(const std::string& text) {
  std::istringstream in(text);
  std::string name;
  in >> name;
  std::vector<Vertex> args;
  Vertex x;
  while (in >> x) args.push_back(x);
  if (!in.eof()) throw Error(fmt::format("malformed query '{}'", text));

  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw Error(fmt::format("query '{}' expects {} vertices, got {}", name, n, args.size()));
  };
  if (name == "X") { need(2); return EventQuery::x(args[0], args[1]); }
  if (name == "Y_star") { need(3); return EventQuery::y_star(args[0], args[1], args[2]); }
  if (name == "Y_line") { need(3); return EventQuery::y_line(args[0], args[1], args[2]); }
  if (name == "Z_line") { need(4); return EventQuery::z_line(args[0], args[1], args[2], args[3]); }
  if (name == "Z_star") { need(4); return EventQuery::z_star(args[0], args[1], args[2], args[3]); }
  if (name == "Path") { need(3); return EventQuery::path(args[0], args[1], args[2]); }
  if (name == "TrianglePath") { need(3); return EventQuery::triangle_path(args[0], args[1], args[2]); }
  throw Error(fmt::format("unknown query kind '{}'", name));
}

}  // namespace cascademix
