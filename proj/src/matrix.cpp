#include "bethe/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace bethe {

namespace {

constexpr int kMaxOrder = 64;

void check_entry(double v) {
  if (std::isnan(v) || std::isinf(v))
    throw ParseError("matrix entries must be finite numbers");
  if (v < 0.0) throw NegativeEntryError("matrix entries must be non-negative");
}

NonNegMatrix from_nested(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ShapeError("matrix must have at least one row");
  const std::size_t n = rows.size();
  if (n > kMaxOrder) throw SizeError("matrix order exceeds the supported cap of 64");
  NonNegMatrix m(static_cast<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      throw ShapeError("matrix must be square; row " + std::to_string(i + 1) +
                       " has " + std::to_string(rows[i].size()) + " entries, expected " +
                       std::to_string(n));
    for (std::size_t j = 0; j < n; ++j) {
      check_entry(rows[i][j]);
      m.at(int(i), int(j)) = rows[i][j];
    }
  }
  return m;
}

NonNegMatrix parse_json_matrix(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }

  const nlohmann::json* rows = nullptr;
  if (j.is_array()) {
    rows = &j;
  } else if (j.is_object()) {
    if (!j.contains("entries"))
      throw ParseError("JSON object form requires an \"entries\" field");
    rows = &j["entries"];
    if (j.contains("n")) {
      if (!j["n"].is_number_integer() || j["n"].get<long>() < 1)
        throw ParseError("\"n\" must be a positive integer");
      if (std::size_t(j["n"].get<long>()) != rows->size())
        throw ShapeError("\"n\" does not match the number of entry rows");
    }
  } else {
    throw ParseError("JSON matrix must be an array-of-arrays or an object with \"entries\"");
  }

  std::vector<std::vector<double>> data;
  for (const auto& r : *rows) {
    if (!r.is_array()) throw ParseError("each matrix row must be a JSON array");
    std::vector<double> row;
    for (const auto& v : r) {
      if (!v.is_number()) throw ParseError("matrix entries must be numbers");
      row.push_back(v.get<double>());
    }
    data.push_back(std::move(row));
  }
  return from_nested(data);
}

NonNegMatrix parse_csv_matrix(const std::string& text) {
  std::vector<std::vector<double>> data;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                     : comma - pos);
      const char* begin = cell.c_str();
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      while (end && *end == ' ') ++end;
      if (end == begin || (end && *end != '\0'))
        throw ParseError("invalid CSV cell: \"" + cell + "\"");
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    data.push_back(std::move(row));
  }
  if (data.empty()) throw ParseError("empty CSV input");
  return from_nested(data);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

NonNegMatrix NonNegMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  return from_nested(rows);
}

bool is_doubly_stochastic(const DoublyStochastic& g, double tol) {
  for (double v : g.entries)
    if (v < -tol || v > 1.0 + tol) return false;
  for (int i = 0; i < g.n; ++i) {
    double rs = 0.0, cs = 0.0;
    for (int j = 0; j < g.n; ++j) {
      rs += g.at(i, j);
      cs += g.at(j, i);
    }
    if (std::fabs(rs - 1.0) > tol || std::fabs(cs - 1.0) > tol) return false;
  }
  return true;
}

NonNegMatrix parse_matrix(const std::string& text, MatrixFormat format) {
  return format == MatrixFormat::json ? parse_json_matrix(text) : parse_csv_matrix(text);
}

std::string serialize_matrix(const NonNegMatrix& m, MatrixFormat format) {
  std::string out;
  if (format == MatrixFormat::json) {
    out += "[";
    for (int i = 0; i < m.n; ++i) {
      out += i ? ",\n [" : "[";
      for (int j = 0; j < m.n; ++j) {
        if (j) out += ",";
        out += format_double(m.at(i, j));
      }
      out += "]";
    }
    out += "]\n";
  } else {
    for (int i = 0; i < m.n; ++i) {
      for (int j = 0; j < m.n; ++j) {
        if (j) out += ",";
        out += format_double(m.at(i, j));
      }
      out += "\n";
    }
  }
  return out;
}

int kuhn_matching(const std::vector<std::vector<int>>& adj, int n_right,
                  std::vector<int>& match_right) {
  const int n_left = int(adj.size());
  match_right.assign(n_right, -1);
  std::vector<char> visited(n_right);

  std::function<bool(int)> try_augment = [&](int i) -> bool {
    for (int j : adj[i]) {
      if (visited[j]) continue;
      visited[j] = 1;
      if (match_right[j] < 0 || try_augment(match_right[j])) {
        match_right[j] = i;
        return true;
      }
    }
    return false;
  };

  int size = 0;
  for (int i = 0; i < n_left; ++i) {
    visited.assign(n_right, 0);
    if (try_augment(i)) ++size;
  }
  return size;
}

SupportReport validate_support(const NonNegMatrix& m) {
  SupportReport rep;
  std::vector<std::vector<int>> adj(m.n);
  std::vector<char> col_nonzero(m.n, 0);
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) {
      if (m.at(i, j) > 0.0) {
        adj[i].push_back(j);
        col_nonzero[j] = 1;
        ++rep.support_edge_count;
      }
    }
    if (adj[i].empty()) rep.zero_rows.push_back(i);
  }
  for (int j = 0; j < m.n; ++j)
    if (!col_nonzero[j]) rep.zero_cols.push_back(j);

  std::vector<int> match_right;
  rep.has_perfect_matching = kuhn_matching(adj, m.n, match_right) == m.n;
  return rep;
}

namespace {

// Edges lying on at least one perfect matching, given one perfect matching
// match_col[i] = j. Classic criterion: a non-matching edge (i,j) is usable
// iff the directed graph on columns with arcs match_col[i] -> j (for every
// supported (i,j)) has match_col[i] and j in the same strongly connected
// component. Kosaraju on <= 64 nodes.
std::vector<char> admissible_edges(const NonNegMatrix& m, const std::vector<int>& match_col) {
  const int n = m.n;
  std::vector<std::vector<int>> fwd(n), rev(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.at(i, j) > 0.0 && j != match_col[i]) {
        fwd[match_col[i]].push_back(j);
        rev[j].push_back(match_col[i]);
      }

  std::vector<int> order;
  std::vector<char> seen(n, 0);
  std::function<void(int)> dfs1 = [&](int u) {
    seen[u] = 1;
    for (int v : fwd[u])
      if (!seen[v]) dfs1(v);
    order.push_back(u);
  };
  for (int u = 0; u < n; ++u)
    if (!seen[u]) dfs1(u);

  std::vector<int> comp(n, -1);
  std::function<void(int, int)> dfs2 = [&](int u, int c) {
    comp[u] = c;
    for (int v : rev[u])
      if (comp[v] < 0) dfs2(v, c);
  };
  int ncomp = 0;
  for (int k = n - 1; k >= 0; --k)
    if (comp[order[k]] < 0) dfs2(order[k], ncomp++);

  std::vector<char> ok(std::size_t(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.at(i, j) > 0.0)
        ok[std::size_t(i) * n + j] =
            (j == match_col[i]) || (comp[match_col[i]] == comp[j]);
  return ok;
}

}  // namespace

SupportReduction reduce_support(const NonNegMatrix& m) {
  const int n = m.n;
  SupportReduction red;

  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.at(i, j) > 0.0) adj[i].push_back(j);

  std::vector<int> match_right;
  if (kuhn_matching(adj, n, match_right) != n) return red;
  red.feasible = true;

  std::vector<int> match_col(n, -1);
  for (int j = 0; j < n; ++j) match_col[match_right[j]] = j;

  std::vector<char> ok = admissible_edges(m, match_col);

  // Peel lines with a single admissible edge. Removing a forced edge keeps
  // the admissibility of the surviving edges, so one pass over a worklist
  // with degree counters suffices.
  std::vector<int> row_deg(n, 0), col_deg(n, 0);
  std::vector<char> row_alive(n, 1), col_alive(n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (ok[std::size_t(i) * n + j]) {
        ++row_deg[i];
        ++col_deg[j];
      }

  auto alive_edge = [&](int i, int j) {
    return row_alive[i] && col_alive[j] && ok[std::size_t(i) * n + j];
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      if (row_alive[i] && row_deg[i] == 1) {
        int jf = -1;
        for (int j = 0; j < n; ++j)
          if (alive_edge(i, j)) jf = j;
        red.forced.emplace_back(i, jf);
        red.forced_log_product += std::log(m.at(i, jf));
        row_alive[i] = 0;
        col_alive[jf] = 0;
        for (int i2 = 0; i2 < n; ++i2)
          if (row_alive[i2] && ok[std::size_t(i2) * n + jf]) --row_deg[i2];
        for (int j2 = 0; j2 < n; ++j2)
          if (col_alive[j2] && ok[std::size_t(i) * n + j2]) --col_deg[j2];
        changed = true;
      }
    }
    for (int j = 0; j < n; ++j) {
      if (col_alive[j] && col_deg[j] == 1) {
        int fi = -1;
        for (int i = 0; i < n; ++i)
          if (alive_edge(i, j)) fi = i;
        red.forced.emplace_back(fi, j);
        red.forced_log_product += std::log(m.at(fi, j));
        row_alive[fi] = 0;
        col_alive[j] = 0;
        for (int i2 = 0; i2 < n; ++i2)
          if (row_alive[i2] && ok[std::size_t(i2) * n + j]) --row_deg[i2];
        for (int j2 = 0; j2 < n; ++j2)
          if (col_alive[j2] && ok[std::size_t(fi) * n + j2]) --col_deg[j2];
        changed = true;
      }
    }
  }

  for (int i = 0; i < n; ++i)
    if (row_alive[i]) red.rows.push_back(i);
  for (int j = 0; j < n; ++j)
    if (col_alive[j]) red.cols.push_back(j);

  const int r = int(red.rows.size());
  red.residual = NonNegMatrix(r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      if (ok[std::size_t(red.rows[a]) * n + red.cols[b]])
        red.residual.at(a, b) = m.at(red.rows[a], red.cols[b]);
  return red;
}

}  // namespace bethe
